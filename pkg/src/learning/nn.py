"""
Small numpy neural-network kernel for Q-function approximation.

Dense layers and two-layer residual blocks, batched forward and reverse-mode
backward passes, MSE loss, SGD/Adam steps, soft target updates, a
finite-difference gradient checker and a versioned parameter record.
"""

import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

FORMAT_VERSION = 1
NUM_ACTIONS = 2
MAX_GRAD_CHECK_PARAMS = 10_000


class LayerKind(str, Enum):
    DENSE = "dense"
    RESIDUAL = "residual"


class Activation(str, Enum):
    RELU = "relu"
    LINEAR = "linear"


class LayerSpec(BaseModel):
    """One layer of the network; residual blocks keep their width."""

    model_config = ConfigDict(frozen=True)

    kind: LayerKind
    in_width: int
    out_width: int
    activation: Activation = Activation.RELU

    @model_validator(mode="after")
    def check_widths(self) -> "LayerSpec":
        if self.in_width < 1 or self.out_width < 1:
            raise ValueError("layer widths must be positive")
        if self.kind == LayerKind.RESIDUAL and self.in_width != self.out_width:
            raise ValueError(
                "residual block needs equal widths, "
                f"got {self.in_width}->{self.out_width}"
            )
        return self

    @property
    def param_shapes(self) -> List[Tuple[int, ...]]:
        if self.kind == LayerKind.DENSE:
            return [(self.out_width, self.in_width), (self.out_width,)]
        w = self.out_width
        return [(w, w), (w,), (w, w), (w,)]


@dataclass
class ParamSet:
    """Ordered weights and biases: W, b per dense layer; W1, b1, W2, b2 per block."""

    specs: Tuple[LayerSpec, ...]
    tensors: List[np.ndarray]

    def __post_init__(self) -> None:
        expected = [shape for spec in self.specs for shape in spec.param_shapes]
        actual = [t.shape for t in self.tensors]
        if expected != actual:
            raise ValueError(
                f"tensor shapes {actual} do not match layer specs {expected}"
            )

    @property
    def num_params(self) -> int:
        return int(sum(t.size for t in self.tensors))

    @property
    def input_width(self) -> int:
        return self.specs[0].in_width

    def layer_tensors(self, index: int) -> List[np.ndarray]:
        start = sum(len(spec.param_shapes) for spec in self.specs[:index])
        return self.tensors[start : start + len(self.specs[index].param_shapes)]

    def copy(self) -> "ParamSet":
        return ParamSet(self.specs, [t.copy() for t in self.tensors])

    def zeros_like(self) -> "ParamSet":
        return ParamSet(self.specs, [np.zeros_like(t) for t in self.tensors])

    def flatten(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.tensors])

    def check_compatible(self, other: "ParamSet") -> None:
        if self.specs != other.specs:
            raise ValueError("parameter sets come from different layer specs")

    def all_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(t))) for t in self.tensors)


def build_specs(
    input_width: int,
    hidden_width: int = 64,
    blocks: int = 2,
    residual: bool = True,
    num_actions: int = NUM_ACTIONS,
) -> List[LayerSpec]:
    """
    ResDNN (residual=True) or the FC-DNN baseline with the same depth and widths.

    Dense(in -> w, ReLU), `blocks` residual blocks of width w (or two plain
    ReLU dense layers each), then a linear Dense(w -> num_actions) head.
    """
    w = hidden_width
    specs = [LayerSpec(kind=LayerKind.DENSE, in_width=input_width, out_width=w)]
    for _ in range(blocks):
        if residual:
            specs.append(LayerSpec(kind=LayerKind.RESIDUAL, in_width=w, out_width=w))
        else:
            dense = LayerSpec(kind=LayerKind.DENSE, in_width=w, out_width=w)
            specs.extend([dense, dense])
    specs.append(
        LayerSpec(
            kind=LayerKind.DENSE,
            in_width=hidden_width,
            out_width=num_actions,
            activation=Activation.LINEAR,
        )
    )
    return specs


def init_params(specs: Sequence[LayerSpec], rng: np.random.Generator) -> ParamSet:
    """He initialisation: weights ~ N(0, 2/fan_in), zero biases."""
    tensors: List[np.ndarray] = []
    for spec in specs:
        for shape in spec.param_shapes:
            if len(shape) == 2:
                tensors.append(rng.normal(0.0, np.sqrt(2.0 / shape[1]), shape))
            else:
                tensors.append(np.zeros(shape))
    return ParamSet(tuple(specs), tensors)


def build_network(
    kind: str,
    state_len: int,
    width: int,
    blocks: int,
    rng: np.random.Generator,
) -> ParamSet:
    """Freshly initialised "resdnn" or "fcdnn" Q-network for a state of state_len."""
    if kind not in ("resdnn", "fcdnn"):
        raise ValueError(f"unknown network kind '{kind}'")
    specs = build_specs(
        state_len, hidden_width=width, blocks=blocks, residual=kind == "resdnn"
    )
    return init_params(specs, rng)


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.RELU:
        return np.maximum(z, 0.0)
    return z


def _activate_grad(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == Activation.RELU:
        return (z > 0).astype(z.dtype)
    return np.ones_like(z)


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass, consumed by backward()."""

    squeeze: bool
    layers: List[Tuple[np.ndarray, ...]] = field(default_factory=list)


def forward_with_cache(
    params: ParamSet, x: np.ndarray
) -> Tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    a = x.reshape(1, -1) if squeeze else x
    if a.shape[1] != params.input_width:
        raise ValueError(
            f"input width {a.shape[1]} does not match "
            f"network input {params.input_width}"
        )

    cache = ForwardCache(squeeze=squeeze)
    for index, spec in enumerate(params.specs):
        tensors = params.layer_tensors(index)
        if spec.kind == LayerKind.DENSE:
            W, b = tensors
            z = a @ W.T + b
            cache.layers.append((a, z))
            a = _activate(z, spec.activation)
        else:
            W1, b1, W2, b2 = tensors
            z1 = a @ W1.T + b1
            h = np.maximum(z1, 0.0)
            z2 = h @ W2.T + b2 + a
            cache.layers.append((a, z1, h, z2))
            a = _activate(z2, spec.activation)

    return (a[0] if squeeze else a), cache


def forward(params: ParamSet, x: np.ndarray) -> np.ndarray:
    """Q-values for one state (1-D input) or a batch of states (2-D input)."""
    out, _ = forward_with_cache(params, x)
    return out


def backward(
    params: ParamSet, cache: Optional[ForwardCache], grad_out: np.ndarray
) -> ParamSet:
    """
    Reverse-mode gradients of a scalar loss with respect to every parameter.

    Args:
        params: The parameters the forward pass ran with
        cache: Context returned by forward_with_cache for the same input
        grad_out: dLoss/dOutput, same shape as the forward output

    Returns:
        ParamSet-shaped gradient
    """
    if cache is None or not cache.layers:
        raise ValueError("backward() needs the context of a forward pass")

    delta = np.asarray(grad_out, dtype=float)
    if cache.squeeze:
        delta = delta.reshape(1, -1)

    grads: List[List[np.ndarray]] = []
    for index in reversed(range(len(params.specs))):
        spec = params.specs[index]
        tensors = params.layer_tensors(index)
        if spec.kind == LayerKind.DENSE:
            W, _ = tensors
            a_in, z = cache.layers[index]
            dz = delta * _activate_grad(z, spec.activation)
            grads.append([dz.T @ a_in, dz.sum(axis=0)])
            delta = dz @ W
        else:
            W1, _, W2, _ = tensors
            a_in, z1, h, z2 = cache.layers[index]
            dz2 = delta * _activate_grad(z2, spec.activation)
            dh = dz2 @ W2
            dz1 = dh * (z1 > 0)
            grads.append([dz1.T @ a_in, dz1.sum(axis=0), dz2.T @ h, dz2.sum(axis=0)])
            # skip path carries dz2 straight through
            delta = dz1 @ W1 + dz2

    ordered = [t for layer in reversed(grads) for t in layer]
    return ParamSet(params.specs, ordered)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(
            f"prediction shape {pred.shape} != target shape {target.shape}"
        )
    return float(np.mean((pred - target) ** 2))


def mse_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(
            f"prediction shape {pred.shape} != target shape {target.shape}"
        )
    return 2.0 * (pred - target) / pred.size


def sgd_step(params: ParamSet, grads: ParamSet, alpha: float) -> ParamSet:
    """theta - alpha * g, element-wise."""
    if alpha <= 0:
        raise ValueError(f"step size must be positive, got {alpha}")
    params.check_compatible(grads)
    return ParamSet(
        params.specs, [p - alpha * g for p, g in zip(params.tensors, grads.tensors)]
    )


def soft_update(target: ParamSet, pred: ParamSet, tau: float) -> ParamSet:
    """(1 - tau) * target + tau * pred, element-wise."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    target.check_compatible(pred)
    return ParamSet(
        target.specs,
        [(1.0 - tau) * t + tau * p for t, p in zip(target.tensors, pred.tensors)],
    )


class SGDOptimizer:
    def __init__(self, alpha: float):
        self.alpha = alpha

    def step(self, params: ParamSet, grads: ParamSet) -> ParamSet:
        return sgd_step(params, grads, self.alpha)


class AdamOptimizer:
    """Adaptive-moment steps with bias correction."""

    def __init__(
        self,
        alpha: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if alpha <= 0:
            raise ValueError(f"step size must be positive, got {alpha}")
        self.alpha = alpha
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: Optional[List[np.ndarray]] = None
        self._v: Optional[List[np.ndarray]] = None
        self._t = 0

    def step(self, params: ParamSet, grads: ParamSet) -> ParamSet:
        params.check_compatible(grads)
        if self._m is None or self._v is None:
            self._m = [np.zeros_like(t) for t in params.tensors]
            self._v = [np.zeros_like(t) for t in params.tensors]

        self._t += 1
        correction1 = 1.0 - self.beta1**self._t
        correction2 = 1.0 - self.beta2**self._t
        updated = []
        for i, (p, g) in enumerate(zip(params.tensors, grads.tensors)):
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * g * g
            m_hat = self._m[i] / correction1
            v_hat = self._v[i] / correction2
            updated.append(p - self.alpha * m_hat / (np.sqrt(v_hat) + self.eps))
        return ParamSet(params.specs, updated)


Optimizer = Union[SGDOptimizer, AdamOptimizer]


def make_optimizer(
    name: str, alpha: float, beta1: float = 0.9, beta2: float = 0.999
) -> Optimizer:
    if name == "sgd":
        return SGDOptimizer(alpha)
    if name == "adam":
        return AdamOptimizer(alpha, beta1=beta1, beta2=beta2)
    raise ValueError(f"Unsupported optimizer: {name}")


GradientFn = Callable[[ParamSet, ForwardCache, np.ndarray], ParamSet]


@dataclass
class GradCheckReport:
    max_rel_error: float
    max_abs_error: float
    num_params: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def grad_check(
    specs: Sequence[LayerSpec],
    seed: int,
    tolerance: float = 1e-4,
    step: float = 1e-5,
    abs_floor: float = 1e-6,
    batch: int = 3,
    gradient_fn: Optional[GradientFn] = None,
) -> GradCheckReport:
    """
    Compare analytic gradients with central differences on a random instance.

    The loss is the MSE between the network output and random targets.
    gradient_fn replaces backward() when supplied.
    """
    rng = np.random.default_rng(seed)
    params = init_params(specs, rng)
    if params.num_params > MAX_GRAD_CHECK_PARAMS:
        raise ValueError(
            f"grad_check is limited to {MAX_GRAD_CHECK_PARAMS} parameters, "
            f"got {params.num_params}"
        )
    # non-zero biases keep the check away from the all-zero ReLU kink
    params = ParamSet(
        params.specs,
        [t if t.ndim == 2 else rng.normal(0.0, 0.1, t.shape) for t in params.tensors],
    )
    x = rng.normal(size=(batch, params.input_width))
    y = rng.normal(size=(batch, specs[-1].out_width))

    out, cache = forward_with_cache(params, x)
    compute = gradient_fn or backward
    analytic = compute(params, cache, mse_grad(out, y))

    max_rel = 0.0
    max_abs = 0.0
    for i, tensor in enumerate(params.tensors):
        for idx in np.ndindex(tensor.shape):
            original = tensor[idx]
            tensor[idx] = original + step
            loss_plus = mse_loss(forward(params, x), y)
            tensor[idx] = original - step
            loss_minus = mse_loss(forward(params, x), y)
            tensor[idx] = original

            numeric = (loss_plus - loss_minus) / (2.0 * step)
            exact = analytic.tensors[i][idx]
            diff = abs(exact - numeric)
            scale = max(abs(exact), abs(numeric), abs_floor)
            max_abs = max(max_abs, diff)
            max_rel = max(max_rel, diff / scale)

    return GradCheckReport(
        max_rel_error=max_rel,
        max_abs_error=max_abs,
        num_params=params.num_params,
        tolerance=tolerance,
    )


def save_params(params: ParamSet, path: Path, metadata: Optional[dict] = None) -> Path:
    """Write a versioned .npz record (layer specs as JSON plus row-major tensors)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format_version": FORMAT_VERSION,
        "specs": [spec.model_dump(mode="json") for spec in params.specs],
        "metadata": metadata or {},
    }
    arrays: dict[str, Any] = {f"t{i}": t for i, t in enumerate(params.tensors)}
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        np.savez(f, header=np.array(json.dumps(header)), **arrays)
    os.replace(tmp, path)
    return path


def load_params(path: Path) -> Tuple[ParamSet, dict]:
    """Read a record written by save_params; returns the params and their metadata."""
    with np.load(Path(path), allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError(
                f"unsupported parameter record version {header.get('format_version')}"
            )
        specs = tuple(LayerSpec.model_validate(s) for s in header["specs"])
        count = sum(len(spec.param_shapes) for spec in specs)
        tensors = [np.array(data[f"t{i}"]) for i in range(count)]
    return ParamSet(specs, tensors), header.get("metadata", {})
