import json

import numpy as np
import pytest

from learning.nn import (
    MAX_GRAD_CHECK_PARAMS,
    AdamOptimizer,
    LayerKind,
    LayerSpec,
    ParamSet,
    backward,
    build_network,
    build_specs,
    forward,
    forward_with_cache,
    grad_check,
    init_params,
    load_params,
    make_optimizer,
    mse_grad,
    mse_loss,
    save_params,
    sgd_step,
    soft_update,
)

pytestmark = pytest.mark.unit


def _params(rng, residual=True, width=6, blocks=2, input_width=10):
    specs = build_specs(
        input_width, hidden_width=width, blocks=blocks, residual=residual
    )
    return init_params(specs, rng)


def test_resdnn_and_fcdnn_share_depth_and_size(rng):
    res = _params(rng, residual=True)
    fc = _params(rng, residual=False)
    assert res.num_params == fc.num_params
    # each residual block holds two weight layers
    res_layers = sum(2 if s.kind == LayerKind.RESIDUAL else 1 for s in res.specs)
    assert res_layers == len(fc.specs)
    assert res.specs[-1].out_width == 2


def test_forward_shapes(rng):
    params = _params(rng)
    assert forward(params, np.zeros(10)).shape == (2,)
    assert forward(params, np.zeros((7, 10))).shape == (7, 2)
    with pytest.raises(ValueError):
        forward(params, np.zeros(9))


def test_residual_spec_needs_equal_widths():
    with pytest.raises(ValueError):
        LayerSpec(kind=LayerKind.RESIDUAL, in_width=4, out_width=5)


def test_zero_weight_residual_block_is_identity(rng):
    specs = [
        LayerSpec(kind=LayerKind.RESIDUAL, in_width=3, out_width=3),
    ]
    params = ParamSet(tuple(specs), [np.zeros((3, 3)), np.zeros(3)] * 2)
    x = np.abs(rng.normal(size=(4, 3)))
    np.testing.assert_allclose(forward(params, x), x)


@pytest.mark.parametrize("seed", range(20))
def test_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    specs = build_specs(
        int(rng.integers(3, 9)),
        hidden_width=int(rng.integers(2, 7)),
        blocks=int(rng.integers(0, 3)),
        residual=bool(seed % 2),
    )
    report = grad_check(specs, seed=seed)
    assert report.passed, report


def test_grad_check_catches_wrong_gradients():
    specs = build_specs(5, hidden_width=4, blocks=1)

    def doubled(params, cache, grad_out):
        grads = backward(params, cache, grad_out)
        return ParamSet(grads.specs, [2.0 * t for t in grads.tensors])

    assert not grad_check(specs, seed=3, gradient_fn=doubled).passed


def test_grad_check_refuses_large_networks():
    specs = build_specs(200, hidden_width=64, blocks=2)
    assert init_params(specs, np.random.default_rng(0)).num_params > (
        MAX_GRAD_CHECK_PARAMS
    )
    with pytest.raises(ValueError):
        grad_check(specs, seed=0)


def test_backward_without_forward_context(rng):
    params = _params(rng)
    with pytest.raises(ValueError):
        backward(params, None, np.zeros(2))


def test_backward_on_single_state(rng):
    params = _params(rng)
    out, cache = forward_with_cache(params, rng.normal(size=10))
    grads = backward(params, cache, np.ones_like(out))
    assert [g.shape for g in grads.tensors] == [t.shape for t in params.tensors]


@pytest.mark.parametrize("tau", [0.01, 0.1, 1.0])
def test_soft_update_contracts_towards_prediction(rng, tau):
    target = _params(rng)
    pred = _params(rng)
    before = np.abs(target.flatten() - pred.flatten())
    updated = soft_update(target, pred, tau)
    after = np.abs(updated.flatten() - pred.flatten())
    np.testing.assert_allclose(after, (1.0 - tau) * before, atol=1e-10)


def test_soft_update_rejects_tau_outside_unit_interval(rng):
    params = _params(rng)
    with pytest.raises(ValueError):
        soft_update(params, params, 1.5)
    with pytest.raises(ValueError):
        soft_update(params, params, -0.1)


def test_soft_update_rejects_mismatched_shapes(rng):
    with pytest.raises(ValueError):
        soft_update(_params(rng, width=6), _params(rng, width=5), 0.1)


def test_sgd_step(rng):
    params = _params(rng)
    grads = ParamSet(params.specs, [np.ones_like(t) for t in params.tensors])
    stepped = sgd_step(params, grads, 0.5)
    np.testing.assert_allclose(stepped.flatten(), params.flatten() - 0.5)
    with pytest.raises(ValueError):
        sgd_step(params, grads, 0.0)


def test_adam_first_step_moves_by_alpha_times_sign(rng):
    params = _params(rng)
    grads = ParamSet(
        params.specs, [rng.normal(size=t.shape) for t in params.tensors]
    )
    g = grads.flatten()
    stepped = AdamOptimizer(1e-3).step(params, grads)
    np.testing.assert_allclose(
        stepped.flatten() - params.flatten(),
        -1e-3 * g / (np.abs(g) + 1e-8),
        rtol=1e-6,
        atol=1e-15,
    )

    exact = AdamOptimizer(1e-3, eps=0.0).step(params, grads)
    np.testing.assert_allclose(
        exact.flatten() - params.flatten(), -1e-3 * np.sign(g), rtol=1e-9
    )


def test_make_optimizer():
    assert make_optimizer("sgd", 0.1).alpha == 0.1
    assert isinstance(make_optimizer("adam", 0.1), AdamOptimizer)
    with pytest.raises(ValueError):
        make_optimizer("rmsprop", 0.1)


def test_mse():
    assert mse_loss([1.0, 3.0], [1.0, 1.0]) == pytest.approx(2.0)
    np.testing.assert_allclose(mse_grad([1.0, 3.0], [1.0, 1.0]), [0.0, 2.0])
    with pytest.raises(ValueError):
        mse_loss(np.zeros(2), np.zeros(3))


def test_save_and_load_params(rng, tmp_path):
    params = _params(rng)
    path = save_params(params, tmp_path / "nested" / "q.npz", {"kind": "resdnn"})
    loaded, metadata = load_params(path)
    assert loaded.specs == params.specs
    np.testing.assert_array_equal(loaded.flatten(), params.flatten())
    assert metadata == {"kind": "resdnn"}


def test_load_rejects_unknown_version(tmp_path):
    path = tmp_path / "old.npz"
    header = {"format_version": 99, "specs": [], "metadata": {}}
    with open(path, "wb") as f:
        np.savez(f, header=np.array(json.dumps(header)))
    with pytest.raises(ValueError, match="version"):
        load_params(path)


def test_build_network(rng):
    res = build_network("resdnn", 12, width=4, blocks=1, rng=rng)
    fc = build_network("fcdnn", 12, width=4, blocks=1, rng=rng)
    assert res.input_width == fc.input_width == 12
    assert LayerKind.RESIDUAL in [s.kind for s in res.specs]
    assert LayerKind.RESIDUAL not in [s.kind for s in fc.specs]
    with pytest.raises(ValueError):
        build_network("lstm", 12, width=4, blocks=1, rng=rng)


@pytest.mark.parametrize("tau", [0.01, 0.1, 1.0])
def test_repeated_soft_updates_contract_geometrically(rng, tau):
    target = _params(rng)
    pred = _params(rng)
    gap = np.linalg.norm(target.flatten() - pred.flatten())
    for _ in range(7):
        target = soft_update(target, pred, tau)
    remaining = np.linalg.norm(target.flatten() - pred.flatten())
    assert remaining == pytest.approx((1.0 - tau) ** 7 * gap, abs=1e-10)
