"""Linear corridor MDP with a closed-form optimum, for convergence checks.

States 0..n-1 sit on a line; the agent starts at 0 and state n-1 is
terminal.  Action 1 moves right, action 0 moves left (stuck at 0).  The
only reward is 1.0 for the transition that enters the terminal state, so
the optimal Q-values are powers of gamma and easy to verify exactly.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from .base import Env, EnvSpec, StepResult

BACK, FORWARD = 0, 1


class ChainEnv(Env):
    """Observation is a one-hot row over the n states (shape (1, n, 1))."""

    def __init__(self, n_states: int, seed: int | np.random.SeedSequence, episode_cap: int = 10_000):
        super().__init__(seed)
        if not 2 <= n_states <= 50:
            raise ConfigurationError(f"chain length must be in 2..50, got {n_states}")
        self.n_states = n_states
        self.episode_cap = episode_cap
        self.spec = EnvSpec(
            name=f"chain:{n_states}",
            n_actions=2,
            obs_shape=(1, n_states, 1),
            r_max=1.0,
        )
        self._pos = 0
        self._steps = 0

    def _obs(self) -> np.ndarray:
        grid = np.zeros((1, self.n_states, 1), dtype=np.uint8)
        grid[0, self._pos, 0] = 1
        return grid

    def _reset(self) -> np.ndarray:
        self._pos = 0
        self._steps = 0
        return self._obs()

    def _step(self, action: int) -> StepResult:
        if action == FORWARD:
            self._pos += 1
        else:
            self._pos = max(0, self._pos - 1)
        self._steps += 1
        reached_goal = self._pos == self.n_states - 1
        # The cap guards against policies that never reach the goal; a
        # capped episode ends without the goal reward.
        done = reached_goal or self._steps >= self.episode_cap
        return StepResult(self._obs(), 1.0 if reached_goal else 0.0, done)


def chain_optimal_q(n_states: int, gamma: float) -> np.ndarray:
    """Exact optimal Q-table via value iteration, shape (n_states - 1, 2).

    Row s holds Q*(s, back) and Q*(s, forward) for the non-terminal states.
    Iterates to a 1e-12 sup-norm fixpoint, far below any tolerance used
    against it.
    """
    if not 2 <= n_states <= 50:
        raise ConfigurationError(f"chain length must be in 2..50, got {n_states}")
    if not 0.0 < gamma < 1.0:
        raise ConfigurationError(f"gamma must be in (0, 1), got {gamma}")
    n = n_states
    q = np.zeros((n - 1, 2))
    while True:
        v = q.max(axis=1)  # terminal state has value 0 and is not stored

        def value(s: int) -> float:
            return 0.0 if s == n - 1 else float(v[s])

        nxt = np.empty_like(q)
        for s in range(n - 1):
            back_to = max(0, s - 1)
            fwd_to = s + 1
            nxt[s, BACK] = gamma * value(back_to)
            nxt[s, FORWARD] = (1.0 if fwd_to == n - 1 else 0.0) + gamma * value(fwd_to)
        if np.max(np.abs(nxt - q)) < 1e-12:
            return nxt
        q = nxt
