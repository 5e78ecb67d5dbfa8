#!/usr/bin/env python3
"""Run every shipped experiment config and summarize the verdicts.

Usage: python scripts/run_all_experiments.py [--out runs] [--seed N]

Exit code is the number of experiments whose verdicts failed.
"""
import argparse
import sys
from pathlib import Path

from regnoise.cli import main as regnoise_main

RUNS = [
    ("basis", "configs/basis.ini"),
    ("trace-check", "configs/trace_check.ini"),
    ("simulate", "configs/simulate.ini"),
    ("averaging", "configs/averaging.ini"),
    ("lasry-lions", "configs/lasry_lions.ini"),
    ("dpf-check", "configs/dpf_rank_one.ini"),
    ("dpf-check", "configs/dpf_diagonal.ini"),
    ("stability", "configs/stability.ini"),
    ("picard", "configs/picard.ini"),
    ("sewing-rates", "configs/sewing_rates.ini"),
]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()
    root = Path(__file__).resolve().parent.parent
    failures = 0
    for experiment, config in RUNS:
        argv = [experiment, "--config", str(root / config)]
        if args.out:
            argv += ["--out", args.out]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        print(f"== {experiment} ({config})")
        code = regnoise_main(argv)
        print(f"   exit code {code}")
        failures += code != 0
    return failures


if __name__ == "__main__":
    sys.exit(main())
