"""Environment interface shared by every game in the lab.

Observations are binary grids (height, width, channels) of uint8 in {0, 1}.
Each environment owns a numpy Generator seeded at construction, so a fixed
seed plus a fixed action sequence reproduces the exact same trajectory,
including stochastic resets.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..errors import UsageError


@dataclass(frozen=True)
class EnvSpec:
    """Static facts the agent and the metrics layer need."""

    name: str
    n_actions: int
    obs_shape: tuple[int, ...]
    r_max: float  # largest reward magnitude a single step can pay


@dataclass(frozen=True)
class StepResult:
    obs: np.ndarray
    reward: float
    terminal: bool


class Env(ABC):
    """Episodic environment with explicit reset/step lifecycle.

    step() before the first reset(), or after a terminal step, is a
    UsageError: the caller must observe episode boundaries, because the
    training loop builds multi-step segments from them.
    """

    spec: EnvSpec

    def __init__(self, seed: int | np.random.SeedSequence):
        self.rng = np.random.default_rng(seed)
        self._live = False

    def reset(self) -> np.ndarray:
        self._live = True
        return self._reset()

    def step(self, action: int) -> StepResult:
        if not self._live:
            raise UsageError(f"{self.spec.name}: step() without a live episode")
        if not 0 <= int(action) < self.spec.n_actions:
            raise UsageError(
                f"{self.spec.name}: action {action} outside 0..{self.spec.n_actions - 1}"
            )
        result = self._step(int(action))
        if result.terminal:
            self._live = False
        return result

    @abstractmethod
    def _reset(self) -> np.ndarray: ...

    @abstractmethod
    def _step(self, action: int) -> StepResult: ...
