"""Epoch CSV parsing and cross-seed aggregation.

The input contract is the seven-column epochs.csv written by the training
package; nothing else about that package is assumed here.  Aggregation
uses the same confidence interval the trainer's summary files use
(mean +/- 1.96 * population std / sqrt(n)) so figures and summaries agree
numerically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

COLUMNS = ("env", "algo", "seed", "epoch", "mean_reward", "max_abs_q", "q_ratio")

# figure kind -> which column lands on the y axis
VALUE_COLUMN = {"reward": "mean_reward", "q_ratio": "q_ratio"}


class SchemaError(ValueError):
    """An input file does not match the epochs.csv contract."""


@dataclass(frozen=True)
class EpochRow:
    env: str
    algo: str
    seed: int
    epoch: int
    mean_reward: float
    max_abs_q: float
    q_ratio: float


@dataclass(frozen=True)
class Series:
    """One plotted curve: per-epoch mean and CI half-width across seeds."""

    env: str
    algo: str
    epochs: np.ndarray
    mean: np.ndarray
    ci: np.ndarray
    n_seeds: np.ndarray


def read_epochs(path: str) -> list[EpochRow]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file, expected header {','.join(COLUMNS)}")
        for i, want in enumerate(COLUMNS):
            got = header[i] if i < len(header) else "<missing>"
            if got != want:
                raise SchemaError(f"{path}: column {i + 1} is {got!r}, expected {want!r}")
        if len(header) > len(COLUMNS):
            raise SchemaError(f"{path}: unexpected extra column {header[len(COLUMNS)]!r}")

        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(COLUMNS):
                raise SchemaError(f"{path}:{lineno}: {len(rec)} fields, expected {len(COLUMNS)}")
            values = dict(zip(COLUMNS, rec))
            parsed = {}
            for col in ("seed", "epoch"):
                try:
                    parsed[col] = int(values[col])
                except ValueError:
                    raise SchemaError(
                        f"{path}:{lineno}: column {col!r} is not an integer: {values[col]!r}"
                    ) from None
            for col in ("mean_reward", "max_abs_q", "q_ratio"):
                try:
                    parsed[col] = float(values[col])
                except ValueError:
                    raise SchemaError(
                        f"{path}:{lineno}: column {col!r} is not a number: {values[col]!r}"
                    ) from None
            rows.append(EpochRow(env=values["env"], algo=values["algo"], **parsed))
    return rows


def load_rows(paths: list[str]) -> list[EpochRow]:
    rows: list[EpochRow] = []
    for path in paths:
        rows.extend(read_epochs(path))
    return rows


def filter_rows(rows, envs=None, algos=None) -> list[EpochRow]:
    keep_env = set(envs) if envs else None
    keep_algo = set(algos) if algos else None
    return [
        r for r in rows
        if (keep_env is None or r.env in keep_env)
        and (keep_algo is None or r.algo in keep_algo)
    ]


def aggregate(rows: list[EpochRow], kind: str) -> list[Series]:
    """Collapse seeds into one Series per (env, algo), epochs ascending."""
    if kind not in VALUE_COLUMN:
        raise SchemaError(f"unknown figure kind {kind!r}, expected one of {sorted(VALUE_COLUMN)}")
    column = VALUE_COLUMN[kind]
    groups: dict[tuple[str, str], dict[int, list[float]]] = {}
    for r in rows:
        groups.setdefault((r.env, r.algo), {}).setdefault(r.epoch, []).append(
            getattr(r, column)
        )

    out = []
    for (env, algo), by_epoch in sorted(groups.items()):
        epochs = np.array(sorted(by_epoch), dtype=np.int64)
        mean = np.empty(epochs.size)
        ci = np.empty(epochs.size)
        n = np.empty(epochs.size, dtype=np.int64)
        for i, e in enumerate(epochs):
            vals = np.asarray(by_epoch[int(e)], dtype=np.float64)
            mean[i] = vals.mean()
            ci[i] = 1.96 * vals.std() / np.sqrt(vals.size)
            n[i] = vals.size
        out.append(Series(env=env, algo=algo, epochs=epochs, mean=mean, ci=ci, n_seeds=n))
    return out
