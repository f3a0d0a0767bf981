from typing import List, Optional

import numpy as np

from .models import Experience


class ReplayBuffer:
    """
    Bounded FIFO of experiences with uniform batch sampling.

    Once full, each deposit overwrites the oldest experience.
    """

    def __init__(self, capacity: int, rng: Optional[np.random.Generator] = None):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.rng = rng or np.random.default_rng()
        self._memory: List[Experience] = []
        self._next_index = 0

    def __len__(self) -> int:
        return len(self._memory)

    def add(self, experience: Experience) -> None:
        if self._next_index >= len(self._memory):
            self._memory.append(experience)
        else:
            self._memory[self._next_index] = experience
        self._next_index = (self._next_index + 1) % self.capacity

    def can_sample(self, batch_size: int) -> bool:
        return len(self._memory) >= batch_size

    def sample(self, batch_size: int) -> List[Experience]:
        """Draw batch_size distinct stored experiences uniformly at random."""
        if not self.can_sample(batch_size):
            raise ValueError(
                f"need at least {batch_size} experiences to sample, have {len(self)}"
            )
        indices = self.rng.choice(len(self._memory), size=batch_size, replace=False)
        return [self._memory[i] for i in indices]

    def contents(self) -> List[Experience]:
        """Stored experiences from oldest to newest."""
        if len(self._memory) < self.capacity:
            return list(self._memory)
        return self._memory[self._next_index :] + self._memory[: self._next_index]
