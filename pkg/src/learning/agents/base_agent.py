import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from network.env import StateLayout
from network.models import Action, NetworkConfig

from ..models import AgentKind, EpsilonSchedule, Experience


def select_action_eps_greedy(
    q_values: Sequence[float], epsilon: float, rng: np.random.Generator
) -> int:
    """
    Uniform random action with probability epsilon, otherwise the argmax.

    Ties among maximal Q-values are broken uniformly at random.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    q = np.asarray(q_values, dtype=float)
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(len(q)))
    best = np.flatnonzero(q == q.max())
    if len(best) == 1:
        return int(best[0])
    return int(rng.choice(best))


class BaseAgent(ABC):
    kind: AgentKind

    def __init__(
        self,
        config: NetworkConfig,
        layout: StateLayout,
        rng: np.random.Generator,
        logger: Optional[logging.Logger] = None,
    ):
        self.config = config
        self.layout = layout
        self.rng = rng
        self.logger = logger or logging.getLogger(f"{self.__class__.__name__}")

        learning = config.learning
        self.epsilon_schedule = EpsilonSchedule(
            epsilon_0=learning.epsilon_0,
            epsilon_min=learning.epsilon_min,
            epsilon_decay=learning.epsilon_decay,
        )
        self.steps = 0

        self.logger.info(f"Initialized {self.kind.value} agent")

    @property
    def epsilon(self) -> float:
        """Exploration rate for the next slot."""
        return self.epsilon_schedule.value(self.steps)

    @abstractmethod
    def q_values(self, state: np.ndarray) -> np.ndarray:
        """Q(s, hold) and Q(s, dispatch)."""
        pass

    @abstractmethod
    def learn(self, experience: Experience) -> Optional[float]:
        """Update from one experience; returns a training loss when one was computed."""
        pass

    @abstractmethod
    def save_policy(self, path: Path) -> Path:
        """Persist the learned policy; returns the written path."""
        pass

    def act(self, state: np.ndarray, epsilon: Optional[float] = None) -> int:
        eps = self.epsilon if epsilon is None else epsilon
        return select_action_eps_greedy(self.q_values(state), eps, self.rng)

    def greedy_action(self, state: np.ndarray) -> int:
        return select_action_eps_greedy(self.q_values(state), 0.0, self.rng)

    def observe(self, experience: Experience) -> Optional[float]:
        """Learn from the experience and advance the exploration clock."""
        loss = self.learn(experience)
        self.steps += 1
        return loss


class HoldAgent(BaseAgent):
    """Baseline iUD that never transmits."""

    kind = AgentKind.HOLD

    def q_values(self, state: np.ndarray) -> np.ndarray:
        values = np.zeros(2)
        values[Action.HOLD] = 1.0
        return values

    def act(self, state: np.ndarray, epsilon: Optional[float] = None) -> int:
        return int(Action.HOLD)

    def learn(self, experience: Experience) -> Optional[float]:
        return None

    def save_policy(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text('{"kind": "hold", "format_version": 1}\n')
        return path
