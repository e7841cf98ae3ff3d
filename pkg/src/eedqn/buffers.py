"""Experience replay and the value-difference buffer behind elastic steps.

ReplayBuffer is a plain FIFO ring sampled uniformly with replacement.
DiffBuffer is the interesting one: it holds recent state-value differences
and answers, in O(1), the segment-boundary threshold

    h = mean(B) + std(B) / sqrt(len(B))

after each push.  Because the threshold is queried every environment step
for a million-step run, mean and std come from compensated running sums
rather than rescans, and evictions subtract through the same compensation
so the running values track a full recomputation to ~1e-9 over the life
of a run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import ConfigurationError, UsageError

__all__ = ["Transition", "ReplayBuffer", "DiffBuffer"]


@dataclass
class Transition:
    """One replayable experience segment.

    ``obs``/``action`` are where the segment started, ``next_obs`` where it
    closed, ``reward_sum`` the discounted reward accumulated in between, and
    ``extra_steps`` how many transitions beyond the first it spans (0 for a
    classic single-step experience).
    """

    obs: np.ndarray
    action: int
    reward_sum: float
    next_obs: np.ndarray
    extra_steps: int
    terminal: bool


class ReplayBuffer:
    """Ring buffer over transitions; oldest entries are overwritten first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigurationError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: List[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, item: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> List[Transition]:
        """Uniform sample with replacement; batch may exceed current size."""
        if not self._items:
            raise UsageError("cannot sample an empty replay buffer")
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]


class _KahanSum:
    """Compensated accumulator: adds and subtracts without drifting."""

    __slots__ = ("total", "_comp")

    def __init__(self):
        self.total = 0.0
        self._comp = 0.0

    def add(self, x: float) -> None:
        y = x - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t


class DiffBuffer:
    """Sliding window of |value difference| samples with O(1) threshold.

    push_and_threshold appends z (evicting the oldest sample at capacity)
    and returns the threshold computed over the window *including* z, so a
    single extreme value also raises the bar it is judged against.  std is
    the population form; with one sample the spread term is exactly 0.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigurationError(f"diff capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: List[float] = []
        self._next = 0
        self._sum = _KahanSum()
        self._sumsq = _KahanSum()

    def __len__(self) -> int:
        return len(self._items)

    def contents(self) -> np.ndarray:
        """Window contents in storage order, for audits and tests."""
        return np.array(self._items, dtype=np.float64)

    def _push(self, z: float) -> None:
        if len(self._items) < self.capacity:
            self._items.append(z)
        else:
            old = self._items[self._next]
            self._sum.add(-old)
            self._sumsq.add(-(old * old))
            self._items[self._next] = z
        self._next = (self._next + 1) % self.capacity
        self._sum.add(z)
        self._sumsq.add(z * z)

    def mean(self) -> float:
        if not self._items:
            return 0.0
        return self._sum.total / len(self._items)

    def std(self) -> float:
        if not self._items:
            return 0.0
        n = len(self._items)
        m = self._sum.total / n
        var = self._sumsq.total / n - m * m
        return float(np.sqrt(max(var, 0.0)))  # clamp cancellation noise

    def threshold(self) -> float:
        if not self._items:
            return 0.0
        return self.mean() + self.std() / np.sqrt(len(self._items))

    def push_and_threshold(self, z: float) -> float:
        z = float(z)
        if not np.isfinite(z) or z < 0.0:
            raise UsageError(f"value difference must be finite and >= 0, got {z}")
        self._push(z)
        return self.threshold()
