"""Command-line entry points: plot-paths and plot-convergence."""

from __future__ import annotations

import argparse
import sys

from plotkit.io import SchemaError
from plotkit.plots import plot_convergence, plot_paths


def main_paths(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-paths",
        description="Render particle sample paths from a paths.csv file.",
    )
    parser.add_argument("paths_csv")
    parser.add_argument("out_image")
    parser.add_argument("--sidecar", default=None,
                        help="optional sidecar for H/beta annotation")
    parser.add_argument("--deterministic", action="store_true",
                        help="fixed rendering settings for identical bytes")
    args = parser.parse_args(argv)
    try:
        info = plot_paths(args.paths_csv, args.out_image, args.sidecar,
                          args.deterministic)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out_image} ({info['particles']} particles)")
    return 0


def main_convergence(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-convergence",
        description="Render a log-log convergence figure from a report CSV "
                    "and its sidecar.",
    )
    parser.add_argument("report_csv")
    parser.add_argument("sidecar")
    parser.add_argument("out_image")
    parser.add_argument("--deterministic", action="store_true")
    args = parser.parse_args(argv)
    try:
        info = plot_convergence(args.report_csv, args.sidecar, args.out_image,
                                args.deterministic)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out_image} (annotation: {info['slope_text']})")
    return 0


if __name__ == "__main__":
    sys.exit(main_convergence())
