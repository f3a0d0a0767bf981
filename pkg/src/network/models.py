import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Action(int, Enum):
    """iUD transmission decision for one slot."""

    HOLD = 0
    DISPATCH = 1


class UdStatus(str, Enum):
    """Per-UD outcome reported on the ACK channel."""

    IDLE = "idle"
    SUCCESS = "success"
    COLLISION = "collision"
    JAMMED = "jammed"

    @property
    def code(self) -> int:
        """Position of this status in the one-hot outcome encoding."""
        return _STATUS_ORDER.index(self)


_STATUS_ORDER = (UdStatus.IDLE, UdStatus.SUCCESS, UdStatus.COLLISION, UdStatus.JAMMED)


class SlotClass(str, Enum):
    """Slot status as seen without the iUD's own action."""

    FREE = "free"
    OCCUPIED = "occupied"
    JAMMED = "jammed"


class Decision(str, Enum):
    """Quality label of an iUD decision."""

    GOOD = "G"
    WORST = "W"
    BAD = "B"
    EXCELLENT = "E"


class RewardMode(str, Enum):
    """Which rate feeds the utilities of transmitters whose packet was destroyed."""

    REALIZED = "realized"
    ATTEMPTED = "attempted"


class ChannelRedraw(str, Enum):
    SLOT = "slot"
    FRAME = "frame"


class PowerRanges(BaseModel):
    """Uniform draw ranges in dBm for transmit powers and noise."""

    model_config = ConfigDict(frozen=True)

    ud_dbm_low: float = 20.0
    ud_dbm_high: float = 25.0
    jam_dbm_low: float = 20.0
    jam_dbm_high: float = 25.0
    noise_dbm_low: float = 2.0
    noise_dbm_high: float = 5.0

    @model_validator(mode="after")
    def check_ranges(self) -> "PowerRanges":
        for name in ("ud", "jam", "noise"):
            low = getattr(self, f"{name}_dbm_low")
            high = getattr(self, f"{name}_dbm_high")
            if low > high:
                raise ValueError(
                    f"{name}_dbm_low ({low}) exceeds {name}_dbm_high ({high})"
                )
        return self


class UnitConstants(BaseModel):
    """Propagation constants pinned to 1; carried along but unused by the SINR."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: float = Field(default=1.0, alias="lambda")
    ple: float = 1.0
    big_lambda: float = 1.0


class LearningConfig(BaseModel):
    """Hyper-parameters shared by the tabular and DQN learners."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(default=0.9, ge=0.0, le=1.0)
    alpha: float = Field(default=1e-3, gt=0.0)
    tabular_alpha: float = Field(default=0.2, gt=0.0, le=1.0)
    epsilon_0: float = Field(default=1.0, ge=0.0, le=1.0)
    epsilon_min: float = Field(default=0.02, ge=0.0, le=1.0)
    epsilon_decay: float = Field(default=0.999, gt=0.0, le=1.0)
    replay_capacity: int = Field(default=10_000, ge=1)
    batch_size: int = Field(default=32, ge=1)
    sync_period: int = Field(default=100, ge=1)
    tau_soft: float = Field(default=0.1, ge=0.0, le=1.0)
    hidden_width: int = Field(default=64, ge=1)
    residual_blocks: int = Field(default=2, ge=0)
    optimizer: Literal["sgd", "adam"] = "adam"
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    faithful_dqn: bool = False
    learner_reward_scale: float = Field(default=0.01, gt=0.0)
    tabular_rate_step: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def check_consistency(self) -> "LearningConfig":
        if self.epsilon_min > self.epsilon_0:
            raise ValueError("epsilon_min must not exceed epsilon_0")
        if self.batch_size > self.replay_capacity:
            raise ValueError("batch_size must not exceed replay_capacity")
        return self

    @property
    def effective_optimizer(self) -> str:
        """Plain SGD whenever the printed update rule is requested."""
        return "sgd" if self.faithful_dqn else self.optimizer


class NetworkConfig(BaseModel):
    """All constants of one scenario: topology, schedules, powers and learning."""

    model_config = ConfigDict(frozen=True)

    num_uds: int = Field(default=4, ge=1, description="Legitimate UDs, iUD included")
    num_jammers: int = Field(default=1, ge=0)
    num_antennas: int = Field(default=4, ge=1)
    slots_per_frame: int = Field(default=5, ge=1)
    num_frames: int = Field(default=200, ge=1)
    episodes: int = Field(default=1, ge=1)
    omega: float = Field(default=0.5, ge=0.0, le=1.0)
    jam_period: int = Field(default=5, ge=1)
    jam_quiet: int = Field(default=2, ge=0)
    history_window: Optional[int] = Field(default=None, ge=1)

    powers: PowerRanges = Field(default_factory=PowerRanges)
    units: UnitConstants = Field(default_factory=UnitConstants)
    learning: LearningConfig = Field(default_factory=LearningConfig)

    reward_mode: RewardMode = RewardMode.REALIZED
    channel_redraw: ChannelRedraw = ChannelRedraw.SLOT
    ideal_sic: bool = False
    invert_jam_pattern: bool = False
    redraw_fud_per_frame: bool = False
    fixed_fud_bits: Optional[List[List[int]]] = None

    seed: int = 0

    @model_validator(mode="after")
    def check_schedule(self) -> "NetworkConfig":
        if self.jam_quiet >= self.jam_period:
            raise ValueError(
                f"jam_quiet ({self.jam_quiet}) must be smaller than jam_period "
                f"({self.jam_period})"
            )
        if self.fixed_fud_bits is not None:
            if len(self.fixed_fud_bits) != self.num_fuds:
                raise ValueError(
                    f"fixed_fud_bits needs {self.num_fuds} rows, "
                    f"got {len(self.fixed_fud_bits)}"
                )
            for row in self.fixed_fud_bits:
                if len(row) != self.slots_per_frame:
                    raise ValueError(
                        f"fixed_fud_bits rows need {self.slots_per_frame} entries"
                    )
                if any(bit not in (0, 1) for bit in row):
                    raise ValueError("fixed_fud_bits entries must be 0 or 1")
        return self

    @property
    def num_fuds(self) -> int:
        return self.num_uds - 1

    @property
    def iud_index(self) -> int:
        """The iUD is always the last legitimate UD."""
        return self.num_uds - 1

    @property
    def window(self) -> int:
        return self.history_window or self.slots_per_frame

    def fingerprint(self) -> str:
        """Stable hash of everything that shapes the simulated network."""
        payload = self.model_dump(mode="json", by_alias=True)
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class PowerProfile:
    """Linear transmit powers for one slot."""

    p_ud: np.ndarray
    p_jam: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.p_ud <= 0) or np.any(self.p_jam <= 0):
            raise ValueError("transmit powers must be strictly positive")


@dataclass(frozen=True)
class ChannelRealization:
    """Complex channel vectors to the AP (columns) and the slot's noise variance."""

    H: np.ndarray
    G: np.ndarray
    noise_var: float

    def __post_init__(self) -> None:
        if not (np.all(np.isfinite(self.H)) and np.all(np.isfinite(self.G))):
            raise ValueError("channel entries must be finite")
        if not self.noise_var > 0:
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")
        if self.G.shape[0] != self.H.shape[0]:
            raise ValueError("H and G must have the same number of antenna rows")

    @property
    def num_antennas(self) -> int:
        return int(self.H.shape[0])

    @property
    def num_uds(self) -> int:
        return int(self.H.shape[1])

    @property
    def num_jammers(self) -> int:
        return int(self.G.shape[1])


@dataclass(frozen=True)
class FudSchedule:
    """Binary (fUD x slot) transmission pattern repeated every frame."""

    bits: np.ndarray

    def slot_bits(self, slot: int) -> np.ndarray:
        return self.bits[:, slot]


@dataclass(frozen=True)
class SlotOutcome:
    """Result of one slot: per-UD status (fUDs first, iUD last) and rates."""

    statuses: Tuple[UdStatus, ...]
    slot_class: SlotClass
    rates: np.ndarray
    attempted_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def transmitted(self) -> np.ndarray:
        return np.array([s != UdStatus.IDLE for s in self.statuses], dtype=np.int8)

    @property
    def successes(self) -> int:
        return sum(1 for s in self.statuses if s == UdStatus.SUCCESS)
