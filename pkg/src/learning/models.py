from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class AgentKind(str, Enum):
    """Learners available to the experiment runner."""

    TABULAR = "tabular"
    FCDNN = "fcdnn"
    RESDNN = "resdnn"
    HOLD = "hold"


@dataclass(frozen=True)
class Experience:
    """(s_t, a_t, r_{t+1}, s_{t+1}) tuple stored in the replay buffer."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray

    def __post_init__(self) -> None:
        if self.state.shape != self.next_state.shape:
            raise ValueError(
                f"state shapes differ: {self.state.shape} vs {self.next_state.shape}"
            )


class EpsilonSchedule(BaseModel):
    """Multiplicative per-slot decay floored at epsilon_min."""

    model_config = ConfigDict(frozen=True)

    epsilon_0: float = Field(default=1.0, ge=0.0, le=1.0)
    epsilon_min: float = Field(default=0.02, ge=0.0, le=1.0)
    epsilon_decay: float = Field(default=0.999, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def check_floor(self) -> "EpsilonSchedule":
        if self.epsilon_min > self.epsilon_0:
            raise ValueError("epsilon_min must not exceed epsilon_0")
        return self

    def value(self, t: int) -> float:
        return max(self.epsilon_min, self.epsilon_0 * self.epsilon_decay**t)
