"""Minimal 10x10 breakout on four binary channels.

Channels: 0 paddle, 1 ball, 2 trail (ball's previous cell), 3 bricks.
The ball moves diagonally; direction codes are 0 up-left, 1 up-right,
2 down-right, 3 down-left.  Side walls flip the horizontal component,
the ceiling and brick hits flip the vertical one, and a paddle save off
the corner reverses the ball completely.  Each brick pays 1; the wall is
rebuilt once cleared.  The episode ends when the ball reaches the paddle
row unsaved.  The only randomness is the ball's starting side at reset.
"""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec, StepResult

# dir -> dir lookup tables for each bounce type
_SIDE_BOUNCE = (1, 0, 3, 2)
_VERT_BOUNCE = (3, 2, 1, 0)
_FULL_BOUNCE = (2, 3, 0, 1)

PADDLE, BALL, TRAIL, BRICK = range(4)


class BreakoutEnv(Env):
    def __init__(self, seed: int | np.random.SeedSequence):
        super().__init__(seed)
        self.spec = EnvSpec(
            name="breakout", n_actions=6, obs_shape=(10, 10, 4), r_max=1.0
        )

    def _reset(self) -> np.ndarray:
        self.ball_y = 3
        start = int(self.rng.integers(0, 2))
        self.ball_x, self.ball_dir = ((0, 2), (9, 3))[start]
        self.pos = 4
        self.brick_map = np.zeros((10, 10), dtype=np.uint8)
        self.brick_map[1:4, :] = 1
        self.strike = False
        self.last_x = self.ball_x
        self.last_y = self.ball_y
        return self._obs()

    def _obs(self) -> np.ndarray:
        grid = np.zeros((10, 10, 4), dtype=np.uint8)
        grid[self.ball_y, self.ball_x, BALL] = 1
        grid[9, self.pos, PADDLE] = 1
        grid[self.last_y, self.last_x, TRAIL] = 1
        grid[:, :, BRICK] = self.brick_map
        return grid

    def _step(self, action: int) -> StepResult:
        reward = 0.0
        # action map: 0 none, 1 left, 2 up, 3 right, 4 down, 5 fire
        if action == 1:
            self.pos = max(0, self.pos - 1)
        elif action == 3:
            self.pos = min(9, self.pos + 1)

        self.last_x, self.last_y = self.ball_x, self.ball_y
        dx = -1 if self.ball_dir in (0, 3) else 1
        dy = -1 if self.ball_dir in (0, 1) else 1
        new_x = self.ball_x + dx
        new_y = self.ball_y + dy

        terminal = False
        strike_toggle = False
        if new_x < 0 or new_x > 9:
            new_x = min(max(new_x, 0), 9)
            self.ball_dir = _SIDE_BOUNCE[self.ball_dir]
        if new_y < 0:
            new_y = 0
            self.ball_dir = _VERT_BOUNCE[self.ball_dir]
        elif self.brick_map[new_y, new_x] == 1:
            strike_toggle = True
            # the strike flag stops one pass through a brick cluster from
            # scoring on consecutive frames
            if not self.strike:
                reward += 1.0
                self.strike = True
                self.brick_map[new_y, new_x] = 0
                new_y = self.last_y
                self.ball_dir = _VERT_BOUNCE[self.ball_dir]
        elif new_y == 9:
            if np.count_nonzero(self.brick_map) == 0:
                self.brick_map[1:4, :] = 1
            if self.ball_x == self.pos:
                self.ball_dir = _VERT_BOUNCE[self.ball_dir]
                new_y = self.last_y
            elif new_x == self.pos:
                self.ball_dir = _FULL_BOUNCE[self.ball_dir]
                new_y = self.last_y
            else:
                terminal = True

        if not strike_toggle:
            self.strike = False
        self.ball_x, self.ball_y = new_x, new_y
        return StepResult(self._obs(), reward, terminal)
