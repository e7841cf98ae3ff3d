"""The sequential training loop shared by every algorithm.

A run is: a warm-up phase that fills replay with random single-step
transitions (and, for elastic agents, warms the diff buffer with value
differences from the freshly initialized targets), then the main loop of
act / step / segment bookkeeping / gradient update.  All randomness flows
from the one run seed through three spawned streams (environment, network
init, policy+replay), so a run is a pure function of (env, config, seed,
total_steps).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import agents, metrics
from .agents import AlgoConfig, Ensemble, SegmentState
from .buffers import DiffBuffer, ReplayBuffer, Transition
from .envs import make_env
from .errors import RunAborted

__all__ = ["EpisodeEnd", "RunLog", "epsilon_at", "run_training"]


@dataclass(frozen=True)
class EpisodeEnd:
    end_step: int  # index of the step the episode finished on, 0-based
    reward: float  # undiscounted return of the episode


@dataclass
class RunLog:
    env: str
    algo: str
    seed: int
    total_steps: int
    episodes: list[EpisodeEnd] = field(default_factory=list)
    # raw per-window acting-time |Q| peaks; carry-forward happens at
    # aggregation time, not here
    q_window_max: np.ndarray = field(default_factory=lambda: np.zeros(metrics.N_EPOCHS))
    q_window_filled: np.ndarray = field(
        default_factory=lambda: np.zeros(metrics.N_EPOCHS, dtype=bool)
    )
    wall_seconds: float = 0.0

    def episode_rewards(self) -> list[float]:
        return [e.reward for e in self.episodes]


def epsilon_at(config: AlgoConfig, step: int) -> float:
    """Linear decay from eps_start to eps_end over eps_decay_steps."""
    frac = min(step / config.eps_decay_steps, 1.0)
    return config.eps_start + (config.eps_end - config.eps_start) * frac


def run_training(
    env_name: str, config: AlgoConfig, seed: int, total_steps: int
) -> tuple[RunLog, Ensemble]:
    """Train one agent for total_steps environment steps after warm-up."""
    config.validate()
    started = time.perf_counter()

    env_ss, net_ss, policy_ss = np.random.SeedSequence(seed).spawn(3)
    env = make_env(env_name, env_ss)
    obs_dim = int(np.prod(env.spec.obs_shape))
    ensemble = agents.init_ensemble(
        config, obs_dim, env.spec.n_actions, np.random.default_rng(net_ss)
    )
    policy_rng = np.random.default_rng(policy_ss)
    replay = ReplayBuffer(config.replay_capacity)
    elastic = config.step_mode == "elastic"
    diff = DiffBuffer(config.diff_capacity) if elastic else None

    # Warm-up: random single-step experiences; elastic agents also bank the
    # value differences so the threshold starts from a populated window.
    obs = env.reset()
    for _ in range(config.prefill):
        a = int(policy_rng.integers(env.spec.n_actions))
        sr = env.step(a)
        replay.push(Transition(obs, a, float(sr.reward), sr.obs, 0, sr.terminal))
        if diff is not None:
            diff.push_and_threshold(agents.state_value_diff(ensemble, obs, sr.obs))
        obs = env.reset() if sr.terminal else sr.obs

    log = RunLog(env=env_name, algo=config.name, seed=seed, total_steps=total_steps)
    obs = env.reset()  # logged episodes are whole episodes
    seg: SegmentState | None = None
    ep_reward = 0.0
    n_updates = 0

    for step in range(total_steps):
        row = agents.online_q_row(ensemble, obs)
        if not np.all(np.isfinite(row)):
            raise RunAborted("non-finite Q values while acting", step)
        window = step * metrics.N_EPOCHS // total_steps
        peak = float(np.max(np.abs(row)))
        if not log.q_window_filled[window] or peak > log.q_window_max[window]:
            log.q_window_max[window] = peak
            log.q_window_filled[window] = True

        a = agents.select_action(obs, epsilon_at(config, step), ensemble, policy_rng, q_row=row)
        sr = env.step(a)
        ep_reward += sr.reward

        if seg is None:
            seg = SegmentState(start_obs=obs, action=a)
        if elastic:
            z = agents.state_value_diff(ensemble, obs, sr.obs)
            if not np.isfinite(z):
                raise RunAborted("non-finite state-value difference", step)
            h = diff.push_and_threshold(z)
            boundary = z > h
        elif config.step_mode == "fixed":
            boundary = seg.extra_steps + 1 >= config.horizon
        else:
            boundary = True
        seg, closed = agents.advance_segment(
            seg, float(sr.reward), sr.obs, sr.terminal, boundary, config.gamma
        )
        if closed is not None:
            replay.push(closed)

        if (step + 1) % config.update_every == 0 and len(replay) > 0:
            batch = replay.sample(config.batch_size, policy_rng)
            losses = agents.learn_step(ensemble, batch)
            if not np.all(np.isfinite(losses)):
                raise RunAborted("non-finite training loss", step)
            n_updates += 1
            if n_updates % config.target_sync_every == 0:
                agents.sync_targets(ensemble)

        if sr.terminal:
            log.episodes.append(EpisodeEnd(end_step=step, reward=ep_reward))
            ep_reward = 0.0
            obs = env.reset()
            seg = None  # closed above; next segment starts fresh
        else:
            obs = sr.obs

    log.wall_seconds = time.perf_counter() - started
    return log, ensemble
