"""Experiment driver: seeded grids of (env, algo, seed) cells.

Each cell trains one agent and writes its own directory under the output
root: config echo, per-episode and per-epoch CSVs, checkpoint, and a small
summary used for resumption.  Cells are isolated: a crash in one is
reported and the grid continues.  After the grid, per-run summaries are
merged into results.csv and summary.json at the root.

Flag precedence: command line > --config JSON file > --paper-scale
defaults > desk-scale defaults (3 seeds x 200k steps).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import multiprocessing
import os
import sys
import traceback

import numpy as np

from . import agents, metrics, nets, training
from .envs import env_names, make_env
from .errors import ConfigurationError

__all__ = ["build_parser", "plan_from_args", "run_cell", "execute_plan", "main"]

DESK_SEEDS = [0, 1, 2]
DESK_STEPS = 200_000
PAPER_SEEDS = list(range(10))
PAPER_STEPS = 1_000_000
DEFAULT_ENVS = ["breakout", "freeway"]
DEFAULT_ALGOS = ["dqn", "ddqn", "avgdqn", "maxmin", "eedqn"]


@dataclasses.dataclass(frozen=True)
class Cell:
    env: str
    algo: str
    seed: int
    steps: int
    out_root: str
    overrides: dict
    resume: bool

    @property
    def directory(self) -> str:
        return os.path.join(self.out_root, self.env, self.algo, str(self.seed))


@dataclasses.dataclass
class ExperimentPlan:
    cells: list[Cell]
    out_root: str
    workers: int


def _config_echo(cell: Cell, config: agents.AlgoConfig) -> dict:
    body = dataclasses.asdict(config)
    body["aggregation"] = config.aggregation.value
    body["hidden"] = list(config.hidden)
    return {
        "env": cell.env,
        "algo": cell.algo,
        "seed": cell.seed,
        "total_steps": cell.steps,
        "config": body,
    }


def run_cell(cell: Cell) -> metrics.RunSummary:
    """Train one cell and write its outputs; returns the summary row."""
    config = agents.make_algo(cell.algo, **cell.overrides)
    echo = _config_echo(cell, config)
    cell_dir = cell.directory
    summary_path = os.path.join(cell_dir, "run_summary.json")
    config_path = os.path.join(cell_dir, "config.json")

    if cell.resume and os.path.exists(summary_path) and os.path.exists(config_path):
        with open(config_path) as f:
            if json.load(f) == echo:
                with open(summary_path) as f:
                    prev = json.load(f)
                return metrics.RunSummary(**prev)

    os.makedirs(cell_dir, exist_ok=True)
    with open(config_path, "w") as f:
        json.dump(echo, f, indent=2)
        f.write("\n")

    log, ensemble = training.run_training(cell.env, config, cell.seed, cell.steps)

    bound = metrics.q_bound(make_env(cell.env, 0).spec.r_max, config.gamma)
    stats = metrics.epoch_aggregate(
        log.episodes, cell.steps, log.q_window_max, log.q_window_filled
    ) if cell.steps > 0 else []
    filled = log.q_window_max[log.q_window_filled]
    peak_ratio = metrics.q_ratio(float(filled.max()), bound) if filled.size else 0.0
    summary = metrics.RunSummary(
        env=cell.env,
        algo=cell.algo,
        seed=cell.seed,
        final_score=metrics.final_score(log.episode_rewards()),
        peak_q_ratio=peak_ratio,
    )

    metrics.write_epochs_csv(
        os.path.join(cell_dir, "epochs.csv"), cell.env, cell.algo, cell.seed, stats, bound
    )
    metrics.write_episodes_csv(os.path.join(cell_dir, "episodes.csv"), log.episodes)
    nets.save_checkpoint(os.path.join(cell_dir, "checkpoint.npz"), ensemble.online)
    with open(summary_path, "w") as f:
        json.dump(dataclasses.asdict(summary), f, indent=2)
        f.write("\n")
    return summary


def _cell_worker(cell: Cell) -> tuple[Cell, dict]:
    try:
        summary = run_cell(cell)
        return cell, {"ok": True, "summary": dataclasses.asdict(summary)}
    except Exception:
        return cell, {"ok": False, "error": traceback.format_exc()}


def execute_plan(plan: ExperimentPlan, echo=print) -> int:
    """Run all cells, merge results, return a process exit code."""
    results: list[metrics.RunSummary] = []
    failures: list[tuple[Cell, str]] = []

    def absorb(cell: Cell, outcome: dict) -> None:
        label = f"{cell.env}/{cell.algo}/seed{cell.seed}"
        if outcome["ok"]:
            s = outcome["summary"]
            results.append(metrics.RunSummary(**s))
            echo(f"[done] {label}: final_score={s['final_score']:.4f} "
                 f"peak_q_ratio={s['peak_q_ratio']:.4f}")
        else:
            failures.append((cell, outcome["error"]))
            try:
                os.makedirs(cell.directory, exist_ok=True)
                with open(os.path.join(cell.directory, "error.txt"), "w") as f:
                    f.write(outcome["error"])
            except OSError:
                pass
            echo(f"[fail] {label}: {outcome['error'].strip().splitlines()[-1]}")

    if plan.workers > 1 and len(plan.cells) > 1:
        with multiprocessing.get_context("spawn").Pool(plan.workers) as pool:
            for cell, outcome in pool.imap_unordered(_cell_worker, plan.cells):
                absorb(cell, outcome)
    else:
        for cell in plan.cells:
            absorb(*_cell_worker(cell))

    if results or not plan.cells:
        os.makedirs(plan.out_root, exist_ok=True)
        metrics.export_results(results, plan.out_root)
    if failures:
        echo(f"{len(failures)} of {len(plan.cells)} cells failed")
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eedqn",
        description="Train ensemble / elastic-step DQN variants on small grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--env", "--envs", dest="env", nargs="+", default=None,
                       help="environment names (breakout, freeway, chain:<n>)")
        p.add_argument("--seeds", nargs="+", type=int, default=None)
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--out", default=None, help="output root directory")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--config", default=None, help="JSON file mirroring these flags")
        p.add_argument("--paper-scale", action="store_true",
                       help="10 seeds x 1M steps unless overridden")
        p.add_argument("--resume", action="store_true",
                       help="skip cells whose outputs already exist")

    run_p = sub.add_parser("run", help="run an explicit env x algo x seed grid")
    run_p.add_argument("--algo", "--algos", dest="algo", nargs="+", default=None,
                       help=f"algorithm names ({', '.join(agents.algo_names())}, nstep:<k>)")
    common(run_p)

    abl_p = sub.add_parser("ablation", help="run the 8-config aggregation ablation")
    common(abl_p)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config file {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    allowed = {"env", "algo", "seeds", "steps", "out", "workers", "paper_scale",
               "resume", "overrides"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(f"unknown config file keys: {sorted(unknown)}")
    return data


def plan_from_args(args: argparse.Namespace) -> ExperimentPlan:
    """Resolve flags, file, and presets into a validated cell grid."""
    file_cfg = _load_config_file(args.config) if args.config else {}

    def pick(flag_value, key, paper_value, desk_value):
        if flag_value is not None:
            return flag_value
        if key in file_cfg:
            return file_cfg[key]
        if args.paper_scale or file_cfg.get("paper_scale"):
            return paper_value
        return desk_value

    envs = pick(args.env, "env", DEFAULT_ENVS, DEFAULT_ENVS)
    seeds = pick(args.seeds, "seeds", PAPER_SEEDS, DESK_SEEDS)
    steps = pick(args.steps, "steps", PAPER_STEPS, DESK_STEPS)
    out_root = pick(args.out, "out", "out", "out")
    workers = pick(args.workers, "workers", 1, 1)
    resume = bool(args.resume or file_cfg.get("resume", False))
    overrides = file_cfg.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigurationError("config 'overrides' must be an object")

    if args.command == "ablation":
        algos = agents.ablation_algos()
    else:
        algos = pick(args.algo, "algo", DEFAULT_ALGOS, DEFAULT_ALGOS)

    if isinstance(envs, str):
        envs = [envs]
    if isinstance(algos, str):
        algos = [algos]
    seeds = [int(s) for s in seeds]
    steps = int(steps)
    workers = int(workers)
    if steps < 0:
        raise ConfigurationError(f"steps must be >= 0, got {steps}")
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers}")

    # Validate every name and override before any cell runs.
    for env in envs:
        make_env(env, 0)
    for algo in algos:
        agents.make_algo(algo, **{k: _json_tuple(v) for k, v in overrides.items()})

    cells = [
        Cell(env=env, algo=algo, seed=seed, steps=steps, out_root=out_root,
             overrides={k: _json_tuple(v) for k, v in overrides.items()}, resume=resume)
        for env in envs
        for algo in algos
        for seed in seeds
    ]
    return ExperimentPlan(cells=cells, out_root=out_root, workers=workers)


def _json_tuple(value):
    # JSON has no tuples; AlgoConfig stores layer sizes as one.
    return tuple(value) if isinstance(value, list) else value


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        plan = plan_from_args(args)
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return execute_plan(plan)


if __name__ == "__main__":
    sys.exit(main())
