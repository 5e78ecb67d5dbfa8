"""Command-line entry: ``plotkit render --csv ... --x ... --y ... --out ...``."""
from __future__ import annotations

import argparse
import sys

from . import FigureError, SlopeFigureSpec, render_slope_figure


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit",
                                     description="slope-fit figures from rate CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    render = sub.add_parser("render")
    render.add_argument("--csv", required=True)
    render.add_argument("--x", required=True)
    render.add_argument("--y", required=True)
    render.add_argument("--stderr", default=None)
    render.add_argument("--ref-slope", type=float, required=True)
    render.add_argument("--ref-label", default=None)
    render.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    spec = SlopeFigureSpec(csv_path=args.csv, x_column=args.x, y_column=args.y,
                           stderr_column=args.stderr, ref_slope=args.ref_slope,
                           ref_label=args.ref_label, out_path=args.out)
    try:
        fit = render_slope_figure(spec)
    except (FigureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"fitted_slope={fit.slope:.17g}")
    print(f"fitted_intercept={fit.intercept:.17g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
