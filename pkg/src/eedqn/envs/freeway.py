"""Minimal 10x10 freeway on seven binary channels.

The chicken starts at the bottom of column 4 and earns 1.0 each time it
reaches the top row, after which it is sent back down and the eight cars
are dealt new random speeds.  Cars live on rows 1..8 and move one cell
every ``period`` frames (period 1..5, sign giving direction), wrapping at
the edges; a collision in column 4 knocks the chicken back to the start.
Channels: 0 chicken, 1 car, 2..6 a one-hot speed tag drawn behind each
car.  Up/down moves are rate-limited to one per three frames, and the
episode ends after a fixed frame budget.
"""

from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec, StepResult

PLAYER_SPEED = 3
TIME_LIMIT = 2500

CHICKEN, CAR = 0, 1  # speed channels are 2 + (period - 1)


class FreewayEnv(Env):
    def __init__(self, seed: int | np.random.SeedSequence):
        super().__init__(seed)
        self.spec = EnvSpec(
            name="freeway", n_actions=6, obs_shape=(10, 10, 7), r_max=1.0
        )

    def _randomize_cars(self, initialize: bool) -> None:
        periods = self.rng.integers(1, 6, size=8)
        directions = self.rng.choice(np.array([-1, 1]), size=8)
        speeds = periods * directions
        if initialize:
            # car = [x, row, countdown, signed period]
            self.cars = [[0, i + 1, int(abs(s)), int(s)] for i, s in enumerate(speeds)]
        else:
            for car, s in zip(self.cars, speeds):
                car[2:4] = [int(abs(s)), int(s)]

    def _reset(self) -> np.ndarray:
        self._randomize_cars(initialize=True)
        self.pos = 9
        self.move_timer = PLAYER_SPEED
        self.terminate_timer = TIME_LIMIT
        return self._obs()

    def _obs(self) -> np.ndarray:
        grid = np.zeros((10, 10, 7), dtype=np.uint8)
        grid[self.pos, 4, CHICKEN] = 1
        for x, row, _, period in self.cars:
            grid[row, x, CAR] = 1
            back_x = x - 1 if period > 0 else x + 1
            if back_x < 0:
                back_x = 9
            elif back_x > 9:
                back_x = 0
            grid[row, back_x, 2 + abs(period) - 1] = 1
        return grid

    def _step(self, action: int) -> StepResult:
        reward = 0.0
        # action map: 0 none, 1 left, 2 up, 3 right, 4 down, 5 fire
        if action == 2 and self.move_timer == 0:
            self.move_timer = PLAYER_SPEED
            self.pos = max(0, self.pos - 1)
        elif action == 4 and self.move_timer == 0:
            self.move_timer = PLAYER_SPEED
            self.pos = min(9, self.pos + 1)

        if self.pos == 0:
            reward += 1.0
            self._randomize_cars(initialize=False)
            self.pos = 9

        for car in self.cars:
            if car[0:2] == [4, self.pos]:
                self.pos = 9
            if car[2] == 0:
                car[2] = abs(car[3])
                car[0] += 1 if car[3] > 0 else -1
                if car[0] < 0:
                    car[0] = 9
                elif car[0] > 9:
                    car[0] = 0
                if car[0:2] == [4, self.pos]:
                    self.pos = 9
            else:
                car[2] -= 1

        if self.move_timer > 0:
            self.move_timer -= 1
        self.terminate_timer -= 1
        terminal = self.terminate_timer < 0
        return StepResult(self._obs(), reward, terminal)
