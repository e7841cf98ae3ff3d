"""Run statistics: epoch aggregation, overestimation ratios, significance.

All CSV floats are written with repr(float(x)) so values round-trip exactly
and a rerun of the same cell produces byte-identical files.
"""

from __future__ import annotations

import csv
import itertools
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "N_EPOCHS",
    "EpochStats",
    "RunSummary",
    "q_bound",
    "q_ratio",
    "epoch_aggregate",
    "final_score",
    "permutation_test",
    "mean_ci",
    "write_epochs_csv",
    "write_episodes_csv",
    "export_results",
]

N_EPOCHS = 100


@dataclass(frozen=True)
class EpochStats:
    """One aggregation window: 1/100 of the step budget."""

    epoch: int
    mean_reward: float
    max_abs_q: float
    episode_count: int
    carried: bool  # no episode ended in this window; mean carried forward


@dataclass(frozen=True)
class RunSummary:
    env: str
    algo: str
    seed: int
    final_score: float  # mean reward over the last (up to) 100 episodes
    peak_q_ratio: float


def q_bound(r_max: float, gamma: float) -> float:
    """Largest attainable |Q|: r_max / (1 - gamma)."""
    if not 0.0 < gamma < 1.0:
        raise ConfigurationError(f"gamma must be in (0, 1), got {gamma}")
    return r_max / (1.0 - gamma)


def q_ratio(max_abs_q: float, bound: float) -> float:
    """Observed peak scaled so 1.0 is the theoretical ceiling."""
    if bound <= 0.0:
        raise ConfigurationError(f"bound must be positive, got {bound}")
    return max_abs_q / bound


def epoch_aggregate(
    episodes,
    total_steps: int,
    q_window_max=None,
    q_window_filled=None,
) -> list[EpochStats]:
    """Aggregate per-episode rewards into the 100 fixed epoch windows.

    ``episodes`` is a sequence with ``end_step`` and ``reward`` fields.  An
    episode belongs to the window containing its final step (floor
    partition).  Windows without a finished episode repeat the previous
    window's mean and are flagged ``carried``; leading empty windows report
    0.0.  The optional q channels follow the same carry rule.
    """
    sums = np.zeros(N_EPOCHS)
    counts = np.zeros(N_EPOCHS, dtype=np.int64)
    for ep in episodes:
        if not 0 <= ep.end_step < total_steps:
            raise ConfigurationError(
                f"episode end step {ep.end_step} outside run of {total_steps} steps"
            )
        w = ep.end_step * N_EPOCHS // total_steps
        sums[w] += ep.reward
        counts[w] += 1

    out = []
    mean_prev = 0.0
    q_prev = 0.0
    for w in range(N_EPOCHS):
        carried = counts[w] == 0
        if not carried:
            mean_prev = sums[w] / counts[w]
        if q_window_max is not None and (q_window_filled is None or q_window_filled[w]):
            q_prev = float(q_window_max[w])
        out.append(
            EpochStats(
                epoch=w,
                mean_reward=float(mean_prev),
                max_abs_q=q_prev,
                episode_count=int(counts[w]),
                carried=bool(carried),
            )
        )
    return out


def final_score(episode_rewards) -> float:
    """Mean reward of the last 100 episodes (all of them if fewer).

    A run that finished no episode scores 0.0; real runs always finish some.
    """
    tail = list(episode_rewards)[-100:]
    if not tail:
        return 0.0
    return float(np.mean(tail))


def _mean_diff(a: np.ndarray, b: np.ndarray) -> float:
    return abs(float(a.mean()) - float(b.mean()))


def permutation_test(
    sample_a,
    sample_b,
    n_permutations: int = 10_000,
    rng: np.random.Generator | None = None,
) -> float:
    """Two-sided permutation p-value for |mean(a) - mean(b)|.

    With 12 or fewer observations in total, every C(n, len(a)) relabeling
    is enumerated and the p-value is exact.  Larger inputs use Monte Carlo
    with the add-one correction p = (1 + hits) / (1 + n_permutations), so p
    can never be 0.  Permuted statistics are compared with a hair of slack
    (1e-12 relative) so exact ties computed in a different float order
    still count as ties.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ConfigurationError("permutation test needs two non-empty samples")
    observed = _mean_diff(a, b)
    slack = 1e-12 * max(1.0, observed)
    pooled = np.concatenate([a, b])
    n, na = pooled.size, a.size

    if n <= 12:
        hits = total = 0
        for idx in itertools.combinations(range(n), na):
            mask = np.zeros(n, dtype=bool)
            mask[list(idx)] = True
            stat = _mean_diff(pooled[mask], pooled[~mask])
            hits += stat >= observed - slack
            total += 1
        return hits / total

    rng = rng or np.random.default_rng(0)
    hits = 0
    for _ in range(n_permutations):
        perm = rng.permutation(pooled)
        hits += _mean_diff(perm[:na], perm[na:]) >= observed - slack
    return (1 + hits) / (1 + n_permutations)


def mean_ci(values) -> tuple[float, float]:
    """Mean and 95% half-width 1.96 * std / sqrt(n), population std."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ConfigurationError("mean_ci needs at least one value")
    return float(arr.mean()), float(1.96 * arr.std() / np.sqrt(arr.size))


def _fmt(x) -> str:
    return repr(float(x))


def write_epochs_csv(path, env: str, algo: str, seed: int, stats, bound: float) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["env", "algo", "seed", "epoch", "mean_reward", "max_abs_q", "q_ratio"])
        for s in stats:
            w.writerow(
                [
                    env,
                    algo,
                    str(seed),
                    str(s.epoch),
                    _fmt(s.mean_reward),
                    _fmt(s.max_abs_q),
                    _fmt(q_ratio(s.max_abs_q, bound)),
                ]
            )


def write_episodes_csv(path, episodes) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "episode", "episodic_reward"])
        for i, ep in enumerate(episodes):
            w.writerow([str(ep.end_step), str(i), _fmt(ep.reward)])


def export_results(
    summaries, out_dir, reference_algo: str = "eedqn", n_permutations: int = 10_000
) -> tuple[str, str]:
    """Write results.csv (one row per run) and summary.json (per env/algo).

    summary.json reports the mean and 95% CI of final scores per (env,
    algo) plus a permutation p-value against the reference algorithm's
    scores on the same environment (null where the reference is absent or
    is the row itself).
    """
    rows = sorted(summaries, key=lambda s: (s.env, s.algo, s.seed))
    results_path = os.path.join(out_dir, "results.csv")
    with open(results_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["env", "algo", "seed", "final_score", "peak_q_ratio"])
        for s in rows:
            w.writerow([s.env, s.algo, str(s.seed), _fmt(s.final_score), _fmt(s.peak_q_ratio)])

    by_cell: dict[tuple[str, str], list[RunSummary]] = {}
    for s in rows:
        by_cell.setdefault((s.env, s.algo), []).append(s)

    summary: dict[str, dict] = {}
    for (env, algo), cell in sorted(by_cell.items()):
        scores = [s.final_score for s in cell]
        mean, ci = mean_ci(scores)
        p = None
        ref = by_cell.get((env, reference_algo))
        if ref is not None and algo != reference_algo:
            p = permutation_test(
                scores, [s.final_score for s in ref], n_permutations=n_permutations
            )
        summary.setdefault(env, {})[algo] = {
            "mean_final_score": mean,
            "ci95_final_score": ci,
            "n_seeds": len(scores),
            "mean_peak_q_ratio": float(np.mean([s.peak_q_ratio for s in cell])),
            "p_vs_" + reference_algo: p,
        }

    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return results_path, summary_path
