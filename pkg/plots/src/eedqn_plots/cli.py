"""plot: turn epoch CSVs into reward or Q-ratio figures."""

from __future__ import annotations

import argparse
import glob
import sys

from . import data, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plot",
        description="Render reward curves or Q-ratio charts from epochs.csv files.",
    )
    p.add_argument("--kind", required=True, choices=sorted(data.VALUE_COLUMN))
    p.add_argument("--in", dest="inputs", required=True, nargs="+",
                   metavar="GLOB", help="epochs.csv paths or glob patterns")
    p.add_argument("--out", required=True, help="output image path (.png)")
    p.add_argument("--data-out", default=None,
                   help="also write the plotted series to this CSV")
    p.add_argument("--envs", nargs="+", default=None, help="keep only these environments")
    p.add_argument("--algos", nargs="+", default=None, help="keep only these algorithms")
    return p


def expand_inputs(patterns: list[str]) -> list[str]:
    paths: list[str] = []
    for pattern in patterns:
        paths.extend(sorted(glob.glob(pattern, recursive=True)))
    # De-duplicate while keeping order so overlapping globs stay harmless.
    return list(dict.fromkeys(paths))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = expand_inputs(args.inputs)
        if not paths:
            raise data.SchemaError(f"no input files match {args.inputs}")
        rows = data.filter_rows(data.load_rows(paths), args.envs, args.algos)
        if not rows:
            raise data.SchemaError("no rows left after env/algo filters")
        series = data.aggregate(rows, args.kind)
    except data.SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    fig = render.render_figure(series, args.kind)
    fig.savefig(args.out, dpi=150)
    if args.data_out:
        render.write_sidecar(args.data_out, series)
    return 0


if __name__ == "__main__":
    sys.exit(main())
