"""
MAC/PHY performance measures and figure-ready training series.

Per frame: success rate xi of every UD, cross-layer achievable rate (CLAR),
the network SCLAR, slot-class counts, iUD collisions/jammed transmissions
and free-slot utilisation.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from learning.training import SlotLog
from network.models import Action, SlotClass, UdStatus

DEFAULT_MA_WINDOW = 100

LEARNING_CURVE_COLUMNS = [
    "slot",
    "reward",
    "reward_ma",
    "epsilon",
    "action",
    "slot_class",
]
LOSS_CURVE_COLUMNS = ["train_step", "batch_loss"]
SCLAR_COLUMNS = ["frame", "sclar", "utilization", "collisions", "jammed_tx"]
EPOCH_LOSS_COLUMNS = ["frame", "mean_loss"]
TRACE_COLUMNS = [
    "frame",
    "slot",
    "fud_bits",
    "jam",
    "iud_action",
    "slot_class",
    "reward",
]


def xi_empirical(outcomes: Sequence[UdStatus]) -> float:
    """Fraction of the frame's slots in which the UD succeeded."""
    if len(outcomes) == 0:
        raise ValueError("xi_empirical needs at least one slot")
    return sum(1 for o in outcomes if UdStatus(o) == UdStatus.SUCCESS) / len(outcomes)


def clar_slot(xi: float, c: float) -> float:
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must lie in [0, 1], got {xi}")
    if c < 0:
        raise ValueError(f"rate must be non-negative, got {c}")
    return xi * c


def sclar(rates: np.ndarray, actions: np.ndarray) -> float:
    """
    Sum over legitimate UDs of r_n . a_n.

    Args:
        rates: UD x slot matrix of per-slot CLAR values (fUDs first, iUD last)
        actions: UD x slot 0/1 transmission matrix of the same shape
    """
    rates = np.atleast_2d(np.asarray(rates, dtype=float))
    actions = np.atleast_2d(np.asarray(actions))
    if rates.shape != actions.shape:
        raise ValueError(f"rates shape {rates.shape} != actions shape {actions.shape}")
    if not np.isin(actions, (0, 1)).all():
        raise ValueError("action entries must be 0 or 1")
    return float(np.einsum("nt,nt->", rates, actions.astype(float)))


def moving_average(series: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean; the first window-1 points average the available prefix."""
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        return values
    csum = np.cumsum(values)
    out = np.empty_like(values)
    head = min(window, values.size)
    out[:head] = csum[:head] / np.arange(1, head + 1)
    if values.size > window:
        out[window:] = (csum[window:] - csum[:-window]) / window
    return out


class FrameMetrics(BaseModel):
    """Performance of one frame."""

    frame: int
    xi: List[float]
    clar: List[float]
    sclar: float
    free_slots: int
    occupied_slots: int
    jammed_slots: int
    iud_collisions: int
    iud_jammed: int
    utilization: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_ranges(self) -> "FrameMetrics":
        if any(not 0.0 <= x <= 1.0 for x in self.xi):
            raise ValueError("xi values must lie in [0, 1]")
        return self

    @property
    def slots(self) -> int:
        return self.free_slots + self.occupied_slots + self.jammed_slots


def _frame_metrics(
    frame: int,
    statuses: Sequence[Sequence[UdStatus]],
    rates: np.ndarray,
    slot_classes: Sequence[SlotClass],
    iud_actions: Sequence[Action],
) -> FrameMetrics:
    """Batch computation over one frame's UD x slot statuses and rate matrix."""
    codes = np.array([[UdStatus(s).code for s in row] for row in statuses], dtype=int)
    num_uds, num_slots = codes.shape
    xi = np.array([xi_empirical(row) for row in statuses])
    transmitted = (codes != UdStatus.IDLE.code).astype(int)
    clar = np.array(
        [
            [clar_slot(xi[n], rates[n, s]) for s in range(num_slots)]
            for n in range(num_uds)
        ]
    )

    free = [i for i, c in enumerate(slot_classes) if c == SlotClass.FREE]
    used = sum(1 for i in free if iud_actions[i] == Action.DISPATCH)
    iud = codes[-1]
    return FrameMetrics(
        frame=frame,
        xi=xi.tolist(),
        clar=(clar * transmitted).sum(axis=1).tolist(),
        sclar=sclar(clar, transmitted),
        free_slots=len(free),
        occupied_slots=sum(1 for c in slot_classes if c == SlotClass.OCCUPIED),
        jammed_slots=sum(1 for c in slot_classes if c == SlotClass.JAMMED),
        iud_collisions=int(np.sum(iud == UdStatus.COLLISION.code)),
        iud_jammed=int(np.sum(iud == UdStatus.JAMMED.code)),
        utilization=used / len(free) if free else 0.0,
    )


def frame_metrics_from_trace(
    logs: Sequence[SlotLog], slots_per_frame: int
) -> List[FrameMetrics]:
    """Recompute every complete frame's metrics from a full slot stream."""
    frames: List[FrameMetrics] = []
    complete = len(logs) - len(logs) % slots_per_frame
    for start in range(0, complete, slots_per_frame):
        chunk = logs[start : start + slots_per_frame]
        statuses = list(zip(*(log.outcome.statuses for log in chunk)))
        rates = np.array([log.outcome.rates for log in chunk]).T
        frames.append(
            _frame_metrics(
                chunk[0].frame,
                statuses,
                rates,
                [log.slot_class for log in chunk],
                [log.action for log in chunk],
            )
        )
    return frames


class FrameAccumulator:
    """
    Streaming per-frame metrics for one simulation run.

    Feed it every SlotLog in order; a FrameMetrics is produced when the
    last slot of a frame arrives.
    """

    def __init__(
        self,
        num_uds: int,
        slots_per_frame: int,
        on_frame: Optional[Callable[[FrameMetrics], None]] = None,
    ):
        self.num_uds = num_uds
        self.slots_per_frame = slots_per_frame
        self.on_frame = on_frame
        self.frames: List[FrameMetrics] = []
        self._reset()

    def _reset(self) -> None:
        self._successes = np.zeros(self.num_uds, dtype=int)
        self._rate_sum = np.zeros(self.num_uds)
        self._counts = {c: 0 for c in SlotClass}
        self._free_used = 0
        self._collisions = 0
        self._jammed = 0
        self._seen = 0

    def update(self, log: SlotLog) -> Optional[FrameMetrics]:
        statuses = log.outcome.statuses
        for n, status in enumerate(statuses):
            if status == UdStatus.SUCCESS:
                self._successes[n] += 1
                self._rate_sum[n] += log.outcome.rates[n]
        self._counts[log.slot_class] += 1
        if log.slot_class == SlotClass.FREE and log.action == Action.DISPATCH:
            self._free_used += 1
        self._collisions += int(statuses[-1] == UdStatus.COLLISION)
        self._jammed += int(statuses[-1] == UdStatus.JAMMED)
        self._seen += 1

        if self._seen < self.slots_per_frame:
            return None
        return self._close(log.frame)

    def _close(self, frame: int) -> FrameMetrics:
        xi = self._successes / self.slots_per_frame
        clar = xi * self._rate_sum
        free = self._counts[SlotClass.FREE]
        metrics = FrameMetrics(
            frame=frame,
            xi=xi.tolist(),
            clar=clar.tolist(),
            sclar=float(clar.sum()),
            free_slots=free,
            occupied_slots=self._counts[SlotClass.OCCUPIED],
            jammed_slots=self._counts[SlotClass.JAMMED],
            iud_collisions=self._collisions,
            iud_jammed=self._jammed,
            utilization=self._free_used / free if free else 0.0,
        )
        self.frames.append(metrics)
        if self.on_frame:
            self.on_frame(metrics)
        self._reset()
        return metrics


@dataclass
class TrainingSeries:
    """Figure-ready series of one run."""

    logs: List[SlotLog]
    frames: List[FrameMetrics]
    ma_window: int = DEFAULT_MA_WINDOW
    losses: List[float] = field(default_factory=list)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([log.reward for log in self.logs], dtype=float)

    @property
    def reward_ma(self) -> np.ndarray:
        return moving_average(self.rewards, self.ma_window)

    @property
    def episodes(self) -> np.ndarray:
        return np.array([log.episode for log in self.logs], dtype=int)

    def learning_curve(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "slot": [log.t for log in self.logs],
                "reward": self.rewards,
                "reward_ma": self.reward_ma,
                "epsilon": [log.epsilon for log in self.logs],
                "action": [int(log.action) for log in self.logs],
                "slot_class": [log.slot_class.value for log in self.logs],
            },
            columns=LEARNING_CURVE_COLUMNS,
        )

    def loss_curve(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "train_step": np.arange(1, len(self.losses) + 1),
                "batch_loss": np.asarray(self.losses, dtype=float),
            },
            columns=LOSS_CURVE_COLUMNS,
        )

    def sclar_curve(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "frame": [f.frame for f in self.frames],
                "sclar": [f.sclar for f in self.frames],
                "utilization": [f.utilization for f in self.frames],
                "collisions": [f.iud_collisions for f in self.frames],
                "jammed_tx": [f.iud_jammed for f in self.frames],
            },
            columns=SCLAR_COLUMNS,
        )

    def epoch_loss(self) -> pd.DataFrame:
        """Mean batch loss of every frame that trained at least once."""
        per_frame = [(log.frame, log.loss) for log in self.logs if log.loss is not None]
        if not per_frame:
            return pd.DataFrame(columns=EPOCH_LOSS_COLUMNS)
        table = pd.DataFrame(per_frame, columns=["frame", "loss"])
        grouped = table.groupby("frame", sort=True)["loss"].mean().reset_index()
        return grouped.rename(columns={"loss": "mean_loss"})[EPOCH_LOSS_COLUMNS]

    def final_reward_ma(self) -> float:
        ma = self.reward_ma
        return float(ma[-1]) if ma.size else 0.0

    def final_sclar(self) -> float:
        return self.frames[-1].sclar if self.frames else 0.0


def trace_frame(records: Sequence) -> pd.DataFrame:
    """Per-slot trace rows from the environment's SlotRecords."""
    return pd.DataFrame(
        {
            "frame": [r.frame for r in records],
            "slot": [r.slot for r in records],
            "fud_bits": ["".join(str(b) for b in r.fud_bits) for r in records],
            "jam": [r.jam for r in records],
            "iud_action": [r.iud_action.name.lower() for r in records],
            "slot_class": [r.slot_class.value for r in records],
            "reward": [r.reward for r in records],
        },
        columns=TRACE_COLUMNS,
    )


def segment_means(values: Sequence[float], segments: int = 10) -> np.ndarray:
    """Means of `segments` consecutive, near-equal slices of a series."""
    values = np.asarray(values, dtype=float)
    if values.size < segments:
        raise ValueError(f"need at least {segments} values, got {values.size}")
    return np.array([chunk.mean() for chunk in np.array_split(values, segments)])
