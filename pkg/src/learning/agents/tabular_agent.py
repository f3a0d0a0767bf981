import json
import logging
import os
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Dict, Hashable, Optional

import numpy as np

from network.env import StateLayout
from network.models import NetworkConfig

from ..models import AgentKind, Experience
from .base_agent import BaseAgent

StateKey = Callable[[np.ndarray], Hashable]


def _raw_key(state: np.ndarray) -> Hashable:
    return tuple(np.asarray(state).ravel().tolist())


@dataclass
class TabularQ:
    """Q-table over discretised states; unseen states read as (0, 0)."""

    alpha: float
    gamma: float
    key_fn: StateKey = _raw_key
    num_actions: int = 2
    table: Dict[Hashable, np.ndarray] = field(default_factory=dict)

    def values(self, state: np.ndarray) -> np.ndarray:
        entry = self.table.get(self.key_fn(state))
        return np.zeros(self.num_actions) if entry is None else entry.copy()

    def __len__(self) -> int:
        return len(self.table)


def tabular_update(q: TabularQ, e: Experience) -> TabularQ:
    """
    One Bellman backup: Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)).

    Only the (s, a) cell is written.
    """
    if not 0.0 < q.alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {q.alpha}")
    if not 0.0 <= q.gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {q.gamma}")

    key = q.key_fn(e.state)
    bootstrap = float(q.values(e.next_state).max())
    row = q.table.get(key)
    row = np.zeros(q.num_actions) if row is None else row.copy()
    row[e.action] += q.alpha * (e.reward + q.gamma * bootstrap - row[e.action])
    q.table[key] = row
    return q


class TabularAgent(BaseAgent):
    """
    Q-learning keyed on the discrete part of the observation.

    With learning.tabular_rate_step set the key also carries the rounded rates,
    so the table indexes the full observation.
    """

    kind = AgentKind.TABULAR

    def __init__(
        self,
        config: NetworkConfig,
        layout: StateLayout,
        rng: np.random.Generator,
        logger: Optional[logging.Logger] = None,
    ):
        super().__init__(config, layout, rng, logger)
        step = self.config.learning.tabular_rate_step
        key_fn: StateKey = (
            self.layout.discrete_key
            if step is None
            else partial(self.layout.rate_key, step=step)
        )
        self.q = TabularQ(
            alpha=self.config.learning.tabular_alpha,
            gamma=self.config.learning.gamma,
            key_fn=key_fn,
        )

    def q_values(self, state: np.ndarray) -> np.ndarray:
        return self.q.values(state)

    def learn(self, experience: Experience) -> Optional[float]:
        tabular_update(self.q, experience)
        return None

    def save_policy(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        entries = [
            {"key": list(key), "q": row.tolist()}
            for key, row in sorted(self.q.table.items())
        ]
        payload = {"kind": self.kind.value, "format_version": 1, "entries": entries}
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(payload))
        os.replace(tmp, path)
        self.logger.info(f"Saved Q-table with {len(entries)} state(s) to {path}")
        return path

    def load_policy(self, path: Path) -> None:
        payload = json.loads(Path(path).read_text())
        if payload.get("kind") != self.kind.value:
            raise ValueError(f"{path} does not hold a tabular policy")
        self.q.table = {
            tuple(entry["key"]): np.array(entry["q"], dtype=float)
            for entry in payload["entries"]
        }
