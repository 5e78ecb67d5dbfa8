#!/usr/bin/env python3
"""Regenerate the fixed-seed averaging sample shipped with plotkit.

Runs the averaging experiment with the shipped config and copies the CSV
and JSON summary into plotkit/sample_data/.  The figure tool's fit is
cross-checked against the summary's slope to 1e-12, so regenerate both
files together or neither.
"""
import shutil
import sys
from pathlib import Path

from regnoise.cli import load_config, run

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    cfg = load_config(ROOT / "configs" / "averaging.ini")
    cfg.experiment = "averaging"
    cfg.custom_eigenvalues = str(ROOT / "configs" / "interval_pi_eigenvalues.txt")
    cfg.samples = 20_000
    cfg.output_dir = str(ROOT / "runs")
    code, run_dir = run(cfg)
    if run_dir is None:
        return code or 1
    target = ROOT / "plotkit" / "sample_data"
    target.mkdir(parents=True, exist_ok=True)
    shutil.copy(run_dir / "averaging.csv", target / "averaging.csv")
    shutil.copy(run_dir / "summary.json", target / "summary.json")
    print(f"sample data refreshed from {run_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
