from __future__ import annotations

from collections import deque

import numpy as np

from .env import Transition


class ReplayBuffer:
    """Bounded FIFO of transitions."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def append(self, tr: Transition) -> None:
        self._items.append(tr)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform batch without replacement."""
        if batch_size > len(self._items):
            raise ValueError(f"batch of {batch_size} from {len(self._items)} stored transitions")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]
