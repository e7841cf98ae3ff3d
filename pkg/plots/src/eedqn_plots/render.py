"""Figure assembly and the numeric sidecar.

One axes per environment, one curve per algorithm with a shaded 95% band.
The q_ratio kind draws a dashed horizontal line at 1.0, the theoretical
ceiling: curves above it mean the learner believes in returns the
environment cannot pay.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .data import Series

Y_LABEL = {"reward": "mean episodic reward", "q_ratio": "peak |Q| / bound"}


def render_figure(series: list[Series], kind: str) -> plt.Figure:
    envs = sorted({s.env for s in series})
    fig, axes = plt.subplots(
        len(envs), 1, figsize=(7, 3.2 * len(envs)), squeeze=False, sharex=True
    )
    for ax, env in zip(axes[:, 0], envs):
        for s in (x for x in series if x.env == env):
            (line,) = ax.plot(s.epochs, s.mean, label=s.algo, linewidth=1.5)
            ax.fill_between(
                s.epochs, s.mean - s.ci, s.mean + s.ci,
                color=line.get_color(), alpha=0.2, linewidth=0,
            )
        if kind == "q_ratio":
            ax.axhline(1.0, linestyle="--", color="0.3", linewidth=1.0)
        ax.set_title(env)
        ax.set_ylabel(Y_LABEL[kind])
        ax.legend(loc="best", fontsize="small")
    axes[-1, 0].set_xlabel("epoch")
    fig.tight_layout()
    return fig


def write_sidecar(path: str, series: list[Series]) -> None:
    """Dump the exact plotted numbers, one row per drawn point."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["env", "algo", "epoch", "mean", "ci95", "n_seeds"])
        for s in series:
            for e, m, c, n in zip(s.epochs, s.mean, s.ci, s.n_seeds):
                w.writerow([s.env, s.algo, str(int(e)), repr(float(m)),
                            repr(float(c)), str(int(n))])
