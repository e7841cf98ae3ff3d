"""Ensemble Q-learning: aggregation rules, elastic segments, TD targets.

One mechanism covers every algorithm in the lab.  An agent owns N
online/target network pairs; acting always follows the mean of the online
heads.  Experience is written as segments: a segment starts at some (s, a),
folds discounted rewards while it stays open, and closes on episode end or
on a step-mode boundary.  Classic single-step agents close every step,
fixed n-step agents close after a set span, and elastic agents close when
the jump between consecutive state values looks large against the recent
history kept in a DiffBuffer.

Targets for a closed segment spanning d+1 transitions bootstrap at
gamma^(d+1) from an aggregate over the target heads; which aggregate is
used per experience kind is the AggregationMode, and is the only thing
separating the ensemble variants from each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import nets
from .buffers import Transition
from .errors import ConfigurationError

__all__ = [
    "AggregationMode",
    "AlgoConfig",
    "Ensemble",
    "SegmentState",
    "init_ensemble",
    "sync_targets",
    "online_q_row",
    "select_action",
    "state_value",
    "state_value_diff",
    "elastic_step",
    "advance_segment",
    "compute_target",
    "compute_targets",
    "learn_step",
    "make_algo",
    "algo_names",
    "ablation_algos",
]


class AggregationMode(Enum):
    """How target heads are combined into a bootstrap value.

    EEDQN takes the member-wise minimum on multi-step experiences and the
    member mean on single-step ones; VARIANT swaps those roles.  MIN_ALL /
    AVG_ALL / CONVEX apply one rule to everything, CONVEX blending
    ``w * mean + (1 - w) * min``.  SINGLE is the classic one-net maximum,
    DOUBLE selects the action with the online net and evaluates it with the
    target, and MAXMIN acts like MIN_ALL (kept separate so the single-step
    baseline reads by its usual name).
    """

    EEDQN = "eedqn"
    VARIANT = "variant"
    MIN_ALL = "min_all"
    AVG_ALL = "avg_all"
    CONVEX = "convex"
    SINGLE = "single"
    DOUBLE = "double"
    MAXMIN = "maxmin"


STEP_MODES = ("single", "fixed", "elastic")
VALUE_STATS = ("greedy", "mean")


@dataclass(frozen=True)
class AlgoConfig:
    """Everything that defines one algorithm run, network topology included."""

    name: str
    aggregation: AggregationMode
    ensemble_size: int = 2
    step_mode: str = "elastic"
    horizon: int = 3  # span of fixed n-step segments
    convex_weight: float = 0.5  # weight on the mean inside CONVEX
    gamma: float = 0.99
    learning_rate: float = 0.00025
    adam_eps: float = 0.0003125
    batch_size: int = 32
    replay_capacity: int = 100_000
    diff_capacity: int = 10_000
    target_sync_every: int = 1000
    update_every: int = 1
    prefill: int = 5000
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_decay_steps: int = 250_000
    hidden: tuple[int, ...] = (128, 128)
    value_stat: str = "greedy"  # scalar state value used for boundary z

    def validate(self) -> None:
        if self.ensemble_size < 1:
            raise ConfigurationError(f"ensemble_size must be >= 1, got {self.ensemble_size}")
        if self.step_mode not in STEP_MODES:
            raise ConfigurationError(f"step_mode must be one of {STEP_MODES}, got {self.step_mode!r}")
        if self.value_stat not in VALUE_STATS:
            raise ConfigurationError(f"value_stat must be one of {VALUE_STATS}, got {self.value_stat!r}")
        if self.step_mode == "fixed" and self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 <= self.convex_weight <= 1.0:
            raise ConfigurationError(f"convex_weight must be in [0, 1], got {self.convex_weight}")
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ConfigurationError(
                f"need 0 <= eps_end <= eps_start <= 1, got {self.eps_end}, {self.eps_start}"
            )
        for fld, low in (
            ("batch_size", 1), ("replay_capacity", 1), ("diff_capacity", 1),
            ("target_sync_every", 1), ("update_every", 1), ("prefill", 0),
            ("eps_decay_steps", 1),
        ):
            if getattr(self, fld) < low:
                raise ConfigurationError(f"{fld} must be >= {low}, got {getattr(self, fld)}")
        if len(self.hidden) < 1 or any(h < 1 for h in self.hidden):
            raise ConfigurationError(f"hidden sizes must be positive, got {self.hidden}")


@dataclass
class Ensemble:
    config: AlgoConfig
    online: list[nets.NetParams]
    targets: list[nets.NetParams]
    opt: list[nets.AdamState]
    obs_dim: int
    n_actions: int


def init_ensemble(
    config: AlgoConfig, obs_dim: int, n_actions: int, rng: np.random.Generator
) -> Ensemble:
    config.validate()
    sizes = (obs_dim, *config.hidden, n_actions)
    online = [nets.init_params(sizes, rng) for _ in range(config.ensemble_size)]
    return Ensemble(
        config=config,
        online=online,
        targets=[nets.clone_params(m) for m in online],
        opt=[nets.init_adam(m, lr=config.learning_rate, eps=config.adam_eps) for m in online],
        obs_dim=obs_dim,
        n_actions=n_actions,
    )


def sync_targets(ensemble: Ensemble) -> None:
    for dst, src in zip(ensemble.targets, ensemble.online):
        nets.copy_into(dst, src)


def _flat(obs: np.ndarray) -> np.ndarray:
    return obs.ravel().astype(np.float64)


def online_q_row(ensemble: Ensemble, obs: np.ndarray) -> np.ndarray:
    """Mean of the online heads' Q-values for one observation."""
    row = nets.forward(ensemble.online[0], _flat(obs))
    for m in ensemble.online[1:]:
        row = row + nets.forward(m, _flat(obs))
    return row / len(ensemble.online)


def select_action(
    obs: np.ndarray,
    epsilon: float,
    ensemble: Ensemble,
    rng: np.random.Generator,
    q_row: np.ndarray | None = None,
) -> int:
    """Epsilon-greedy over the mean online Q-row; ties go to the lowest index.

    The caller may pass a precomputed q_row to avoid a second forward pass;
    one uniform draw is always consumed so the random stream does not depend
    on whether the greedy branch is taken.
    """
    explore = rng.random() < epsilon
    if explore:
        return int(rng.integers(ensemble.n_actions))
    if q_row is None:
        q_row = online_q_row(ensemble, obs)
    return int(np.argmax(q_row))


def state_value(ensemble: Ensemble, obs: np.ndarray, stat: str | None = None) -> float:
    """Scalar value of a state under the mean of the *target* heads.

    "greedy" takes the best action's value, "mean" averages over actions.
    """
    stat = stat or ensemble.config.value_stat
    row = nets.forward(ensemble.targets[0], _flat(obs))
    for t in ensemble.targets[1:]:
        row = row + nets.forward(t, _flat(obs))
    row = row / len(ensemble.targets)
    return float(row.max()) if stat == "greedy" else float(row.mean())


def state_value_diff(ensemble: Ensemble, obs: np.ndarray, next_obs: np.ndarray) -> float:
    """z = |V(s) - V(s')| between consecutive states, the boundary signal."""
    return abs(state_value(ensemble, obs) - state_value(ensemble, next_obs))


@dataclass
class SegmentState:
    """An open experience segment: where it started and what it has earned."""

    start_obs: np.ndarray
    action: int
    reward_sum: float = 0.0
    extra_steps: int = 0


def advance_segment(
    seg: SegmentState,
    reward: float,
    next_obs: np.ndarray,
    terminal: bool,
    boundary: bool,
    gamma: float,
) -> tuple[SegmentState | None, Transition | None]:
    """Fold this step's reward, then close the segment if asked.

    The closing step's reward is always part of the segment: the fold
    happens before the boundary decision is applied.  A closed segment with
    extra_steps = d spans d+1 environment transitions.
    """
    seg.reward_sum += gamma**seg.extra_steps * reward
    if terminal or boundary:
        done = Transition(
            obs=seg.start_obs,
            action=seg.action,
            reward_sum=seg.reward_sum,
            next_obs=next_obs,
            extra_steps=seg.extra_steps,
            terminal=terminal,
        )
        return None, done
    seg.extra_steps += 1
    return seg, None


def elastic_step(
    seg: SegmentState,
    reward: float,
    next_obs: np.ndarray,
    terminal: bool,
    z: float,
    h: float,
    gamma: float,
) -> tuple[SegmentState | None, Transition | None]:
    """Elastic boundary rule: close when the value jump z exceeds h."""
    return advance_segment(seg, reward, next_obs, terminal, boundary=z > h, gamma=gamma)


def _target_q_stack(members: list[nets.NetParams], x: np.ndarray) -> np.ndarray:
    return np.stack([nets.forward(m, x) for m in members])  # (N, B, A)


def _bootstrap_values(
    ensemble: Ensemble, next_x: np.ndarray, multi: np.ndarray
) -> np.ndarray:
    """Aggregated next-state values, one per batch row.

    ``multi`` marks rows whose segment spans more than one transition; only
    EEDQN and VARIANT treat those differently.
    """
    cfg = ensemble.config
    mode = cfg.aggregation
    tq = _target_q_stack(ensemble.targets, next_x)  # (N, B, A)

    if mode is AggregationMode.SINGLE:
        return tq[0].max(axis=1)
    if mode is AggregationMode.DOUBLE:
        oq = _target_q_stack(ensemble.online, next_x).mean(axis=0)  # selection
        chosen = oq.argmax(axis=1)
        evaluated = tq.mean(axis=0)  # evaluation
        return evaluated[np.arange(next_x.shape[0]), chosen]

    mean_rows = tq.mean(axis=0)  # (B, A): aggregate per action, max afterwards
    min_rows = tq.min(axis=0)
    if mode in (AggregationMode.MIN_ALL, AggregationMode.MAXMIN):
        return min_rows.max(axis=1)
    if mode is AggregationMode.AVG_ALL:
        return mean_rows.max(axis=1)
    if mode is AggregationMode.CONVEX:
        w = cfg.convex_weight
        return (w * mean_rows + (1.0 - w) * min_rows).max(axis=1)
    mean_v = mean_rows.max(axis=1)
    min_v = min_rows.max(axis=1)
    if mode is AggregationMode.EEDQN:
        return np.where(multi, min_v, mean_v)
    if mode is AggregationMode.VARIANT:
        return np.where(multi, mean_v, min_v)
    raise ConfigurationError(f"unhandled aggregation mode {mode}")


def _assemble(batch: list[Transition], obs_dim: int):
    x = np.stack([t.obs.ravel() for t in batch]).astype(np.float64)
    next_x = np.stack([t.next_obs.ravel() for t in batch]).astype(np.float64)
    if x.shape[1] != obs_dim:
        raise ConfigurationError(f"transition width {x.shape[1]} != ensemble obs_dim {obs_dim}")
    actions = np.array([t.action for t in batch], dtype=np.int64)
    rewards = np.array([t.reward_sum for t in batch], dtype=np.float64)
    spans = np.array([t.extra_steps for t in batch], dtype=np.int64)
    terminal = np.array([t.terminal for t in batch], dtype=bool)
    return x, next_x, actions, rewards, spans, terminal


def compute_targets(ensemble: Ensemble, batch: list[Transition]) -> np.ndarray:
    """TD targets y = R + gamma^(d+1) * aggregate(s'), or y = R at terminals."""
    _, next_x, _, rewards, spans, terminal = _assemble(batch, ensemble.obs_dim)
    gamma = ensemble.config.gamma
    boot = _bootstrap_values(ensemble, next_x, multi=spans > 0)
    y = rewards + np.where(terminal, 0.0, gamma ** (spans + 1) * boot)
    return y


def compute_target(ensemble: Ensemble, transition: Transition) -> float:
    return float(compute_targets(ensemble, [transition])[0])


def learn_step(ensemble: Ensemble, batch: list[Transition]) -> np.ndarray:
    """One gradient step on every online head against shared targets.

    Returns the per-head losses so the caller can watch for divergence.
    """
    x, _, actions, _, _, _ = _assemble(batch, ensemble.obs_dim)
    y = compute_targets(ensemble, batch)
    losses = np.empty(len(ensemble.online))
    for i, (member, opt) in enumerate(zip(ensemble.online, ensemble.opt)):
        grads = nets.gradient(member, x, actions, y)
        nets.apply_update(member, opt, grads)
        losses[i] = grads.loss
    return losses


# --- algorithm registry ----------------------------------------------------

_FIXED_ALGOS: dict[str, AlgoConfig] = {
    cfg.name: cfg
    for cfg in (
        AlgoConfig("dqn", AggregationMode.SINGLE, ensemble_size=1, step_mode="single"),
        AlgoConfig("ddqn", AggregationMode.DOUBLE, ensemble_size=1, step_mode="single"),
        AlgoConfig("avgdqn", AggregationMode.AVG_ALL, ensemble_size=2, step_mode="single"),
        AlgoConfig("maxmin", AggregationMode.MAXMIN, ensemble_size=2, step_mode="single"),
        AlgoConfig("esdqn", AggregationMode.SINGLE, ensemble_size=1, step_mode="elastic"),
        AlgoConfig("eedqn", AggregationMode.EEDQN, ensemble_size=2, step_mode="elastic"),
        AlgoConfig("variant_eedqn", AggregationMode.VARIANT, ensemble_size=2, step_mode="elastic"),
        AlgoConfig("min_eedqn", AggregationMode.MIN_ALL, ensemble_size=2, step_mode="elastic"),
        AlgoConfig("mean_eedqn", AggregationMode.AVG_ALL, ensemble_size=2, step_mode="elastic"),
        AlgoConfig("convex_eedqn_75", AggregationMode.CONVEX, ensemble_size=2, step_mode="elastic", convex_weight=0.75),
        AlgoConfig("convex_eedqn_50", AggregationMode.CONVEX, ensemble_size=2, step_mode="elastic", convex_weight=0.50),
        AlgoConfig("convex_eedqn_25", AggregationMode.CONVEX, ensemble_size=2, step_mode="elastic", convex_weight=0.25),
    )
}


def make_algo(name: str, **overrides) -> AlgoConfig:
    """Config for a registered algorithm name; "nstep:<k>" is parameterized."""
    if name in _FIXED_ALGOS:
        cfg = _FIXED_ALGOS[name]
    elif name.startswith("nstep:"):
        raw = name.split(":", 1)[1]
        try:
            k = int(raw)
        except ValueError:
            raise ConfigurationError(f"bad horizon {raw!r} in {name!r}") from None
        cfg = AlgoConfig(name, AggregationMode.SINGLE, ensemble_size=1, step_mode="fixed", horizon=k)
    else:
        raise ConfigurationError(
            f"unknown algorithm {name!r}; expected one of {sorted(_FIXED_ALGOS)} or nstep:<k>"
        )
    if overrides:
        cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def algo_names() -> list[str]:
    return sorted(_FIXED_ALGOS)


def ablation_algos() -> list[str]:
    """The elastic-step family compared head to head."""
    return [
        "esdqn",
        "eedqn",
        "variant_eedqn",
        "min_eedqn",
        "mean_eedqn",
        "convex_eedqn_75",
        "convex_eedqn_50",
        "convex_eedqn_25",
    ]
