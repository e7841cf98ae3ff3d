"""Environment dynamics against hand-worked traces and closed forms.

The chain optimum has an exact closed form (powers of gamma), so value
iteration is checked against that and against its own Bellman residual.
The grid games are checked with short scripted trajectories whose outcomes
were stepped through by hand, plus white-box setups for the rarer events
(brick strikes, paddle saves, collisions, wall rebuilds).
"""

import numpy as np
import pytest

from eedqn.envs import (
    BreakoutEnv,
    ChainEnv,
    FreewayEnv,
    chain_optimal_q,
    env_names,
    make_env,
)
from eedqn.envs.breakout import BALL, BRICK, PADDLE, TRAIL
from eedqn.errors import ConfigurationError, UsageError

NOOP = 0


def ball_at(obs):
    (y, x), = np.argwhere(obs[:, :, BALL])
    return int(y), int(x)


def breakout_starting(side):
    """Fresh just-reset env whose ball starts on the given side (0=left)."""
    want_x = 0 if side == 0 else 9
    for seed in range(64):
        env = BreakoutEnv(seed)
        obs = env.reset()
        if ball_at(obs)[1] == want_x:
            return env, obs
    raise AssertionError("no seed produced the requested start side")


class TestRegistry:
    def test_known_names(self):
        assert env_names() == ["breakout", "freeway"]
        assert make_env("breakout", 0).spec.n_actions == 6
        assert make_env("chain:7", 0).spec.obs_shape == (1, 7, 1)

    def test_unknown_name_rejected(self):
        with pytest.raises(ConfigurationError):
            make_env("pong", 0)
        with pytest.raises(ConfigurationError):
            make_env("chain:x", 0)
        with pytest.raises(ConfigurationError):
            make_env("chain:1", 0)

    def test_lifecycle_misuse(self):
        env = make_env("chain:3", 0)
        with pytest.raises(UsageError):
            env.step(0)
        env.reset()
        with pytest.raises(UsageError):
            env.step(2)

    def test_step_after_terminal_rejected(self):
        env = make_env("chain:2", 0)
        env.reset()
        assert env.step(1).terminal
        with pytest.raises(UsageError):
            env.step(1)

    @pytest.mark.parametrize("name", ["breakout", "freeway", "chain:4"])
    def test_same_seed_same_trajectory(self, name):
        def rollout(seed):
            env = make_env(name, seed)
            action_rng = np.random.default_rng(99)
            obs = [env.reset()]
            for _ in range(300):
                r = env.step(int(action_rng.integers(env.spec.n_actions)))
                obs.append(r.obs)
                if r.terminal:
                    obs.append(env.reset())
            return obs

        for a, b in zip(rollout(5), rollout(5)):
            assert np.array_equal(a, b)


class TestChain:
    def test_optimal_q_matches_hand_example(self):
        q = chain_optimal_q(3, 0.5)
        assert q[0, 1] == pytest.approx(0.5, abs=1e-10)
        assert q[1, 1] == pytest.approx(1.0, abs=1e-10)

    def test_optimal_q_matches_closed_form(self):
        # Going straight forward from s reaches the goal in n-1-s moves,
        # so Q*(s, fwd) = gamma^(n-2-s) and back pays one detour step.
        for n, gamma in ((2, 0.9), (5, 0.99), (12, 0.8)):
            q = chain_optimal_q(n, gamma)
            for s in range(n - 1):
                fwd = gamma ** (n - 2 - s)
                back = gamma * gamma ** (n - 2 - max(0, s - 1))
                assert q[s, 1] == pytest.approx(fwd, abs=1e-10)
                assert q[s, 0] == pytest.approx(back, abs=1e-10)

    def test_optimal_q_bellman_residual(self):
        n, gamma = 8, 0.97
        q = chain_optimal_q(n, gamma)
        v = np.append(q.max(axis=1), 0.0)  # terminal value 0
        for s in range(n - 1):
            back = gamma * v[max(0, s - 1)]
            fwd = (1.0 if s + 1 == n - 1 else 0.0) + gamma * v[s + 1]
            assert abs(q[s, 0] - back) <= 1e-10
            assert abs(q[s, 1] - fwd) <= 1e-10

    def test_optimal_q_validates_inputs(self):
        with pytest.raises(ConfigurationError):
            chain_optimal_q(1, 0.9)
        with pytest.raises(ConfigurationError):
            chain_optimal_q(51, 0.9)
        with pytest.raises(ConfigurationError):
            chain_optimal_q(5, 1.0)

    def test_walk_to_goal(self):
        env = ChainEnv(4, seed=0)
        obs = env.reset()
        assert obs[0, 0, 0] == 1
        r = env.step(1)
        assert (r.reward, r.terminal) == (0.0, False)
        assert r.obs[0, 1, 0] == 1
        r = env.step(0)  # back to 0
        assert r.obs[0, 0, 0] == 1
        r = env.step(0)  # stuck at the left end
        assert r.obs[0, 0, 0] == 1
        for want in ((0.0, False), (0.0, False), (1.0, True)):
            r = env.step(1)
            assert (r.reward, r.terminal) == want

    def test_episode_cap_ends_without_reward(self):
        env = ChainEnv(5, seed=0, episode_cap=7)
        env.reset()
        for _ in range(6):
            assert not env.step(0).terminal
        r = env.step(0)
        assert r.terminal and r.reward == 0.0


class TestBreakout:
    def test_reset_layout(self):
        env, obs = breakout_starting(side=0)
        assert obs.shape == (10, 10, 4) and obs.dtype == np.uint8
        assert ball_at(obs) == (3, 0)
        assert obs[9, 4, PADDLE] == 1
        assert obs[:, :, BRICK].sum() == 30
        assert np.array_equal(np.argwhere(obs[:, :, BRICK])[:, 0].min(), 1)

    def test_left_start_noop_trace(self):
        # Ball departs (3,0) moving down-right and, with the paddle parked
        # at column 4, sails past it on the sixth frame.
        env, _ = breakout_starting(side=0)
        for want in ((4, 1), (5, 2), (6, 3), (7, 4), (8, 5)):
            r = env.step(NOOP)
            assert ball_at(r.obs) == want
            assert not r.terminal and r.reward == 0.0
        r = env.step(NOOP)
        assert r.terminal and r.reward == 0.0

    def test_trail_marks_previous_cell(self):
        env, obs = breakout_starting(side=0)
        prev = ball_at(obs)
        r = env.step(NOOP)
        (ty, tx), = np.argwhere(r.obs[:, :, TRAIL])
        assert (int(ty), int(tx)) == prev

    def test_paddle_movement_clamped(self):
        env, _ = breakout_starting(side=0)
        for _ in range(5):  # 4 -> 0, then stuck at the wall
            r = env.step(1)
        assert r.obs[9, 0, PADDLE] == 1
        env, _ = breakout_starting(side=0)
        for _ in range(5):  # 4 -> 9
            r = env.step(3)
        assert r.obs[9, 9, PADDLE] == 1 and not r.terminal

    def test_brick_strike_scores_and_bounces_back(self):
        env, _ = breakout_starting(side=0)
        env.ball_x, env.ball_y, env.ball_dir = 5, 4, 0  # heading up-left
        r = env.step(NOOP)
        assert r.reward == 1.0
        assert env.brick_map[3, 4] == 0
        assert ball_at(r.obs) == (4, 4)  # pushed back to its old row

    def test_strike_flag_blocks_consecutive_scores(self):
        env, _ = breakout_starting(side=0)
        env.ball_x, env.ball_y, env.ball_dir = 5, 4, 0
        assert env.step(NOOP).reward == 1.0
        env.ball_x, env.ball_y, env.ball_dir = 5, 4, 0
        r = env.step(NOOP)
        assert r.reward == 0.0
        assert env.brick_map[3, 4] == 0 and env.brick_map.sum() == 29

    def test_paddle_save_reverses_ball(self):
        env, _ = breakout_starting(side=0)
        env.ball_x, env.ball_y, env.ball_dir = 4, 8, 3  # falling onto the paddle
        r = env.step(NOOP)
        assert not r.terminal
        assert ball_at(r.obs) == (8, 3)

    def test_cleared_wall_rebuilds_on_floor_visit(self):
        env, _ = breakout_starting(side=0)
        env.brick_map[:] = 0
        env.ball_x, env.ball_y, env.ball_dir = 4, 8, 3
        r = env.step(NOOP)
        assert not r.terminal
        assert r.obs[:, :, BRICK].sum() == 30

    def test_random_play_observation_wellformed(self):
        env = BreakoutEnv(3)
        rng = np.random.default_rng(1)
        obs = env.reset()
        for _ in range(500):
            assert set(np.unique(obs)) <= {0, 1}
            assert obs[:, :, BALL].sum() == 1
            assert obs[:, :, PADDLE].sum() == 1
            r = env.step(int(rng.integers(6)))
            obs = r.obs if not r.terminal else env.reset()


class TestFreeway:
    def test_reset_layout(self):
        env = FreewayEnv(0)
        obs = env.reset()
        assert obs.shape == (10, 10, 7) and obs.dtype == np.uint8
        assert obs[9, 4, 0] == 1
        assert obs[:, :, 1].sum() == 8
        assert sorted(np.argwhere(obs[:, :, 1])[:, 0]) == list(range(1, 9))
        # each car drags exactly one speed tag
        assert obs[:, :, 2:].sum() == 8

    def test_up_moves_are_rate_limited(self):
        env = FreewayEnv(0)
        env.reset()
        for _ in range(3):  # move timer still draining
            r = env.step(2)
            assert r.obs[9, 4, 0] == 1
        r = env.step(2)
        assert r.obs[8, 4, 0] == 1

    def test_crossing_pays_and_restarts(self):
        env = FreewayEnv(0)
        env.reset()
        env.pos, env.move_timer = 1, 0
        r = env.step(2)
        assert r.reward == 1.0
        assert r.obs[9, 4, 0] == 1

    def test_collision_knocks_back_to_start(self):
        env = FreewayEnv(0)
        env.reset()
        env.pos = 5
        env.cars[0] = [4, 5, 5, 1]  # parked on the chicken's cell
        r = env.step(NOOP)
        assert r.reward == 0.0
        assert r.obs[9, 4, 0] == 1

    def test_episode_lasts_the_frame_budget(self):
        env = FreewayEnv(0)
        env.reset()
        steps = 0
        while True:
            steps += 1
            if env.step(NOOP).terminal:
                break
        assert steps == 2501

    def test_cars_wrap_around(self):
        env = FreewayEnv(0)
        env.reset()
        env.cars[0] = [9, 1, 0, 1]  # due to move right off the edge
        r = env.step(NOOP)
        assert r.obs[1, 0, 1] == 1
