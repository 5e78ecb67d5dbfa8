"""Slope-fit figures from experiment CSV files.

Reads a rate table (positive x and y columns, optional standard errors),
fits a weighted least-squares line in log-log coordinates, and renders a
figure with error bars, the fitted line, and a reference-slope line.

Fit convention, shared with the producer of the CSVs: with standard
errors s_i the weights are w_i = (y_i / s_i)^2, the delta-method inverse
variance of log y_i; without a stderr column (or when any s_i is zero)
the fit is unweighted.  The fit is recomputed here rather than read from
any summary file: one regression implementation guards the other, and a
drift between CSV and summary shows up as a slope mismatch.
"""

__version__ = "0.1.0"

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class FigureError(ValueError):
    """Malformed table: missing columns, too few rows, bad values."""


@dataclass(frozen=True)
class SlopeFigureSpec:
    """One figure: where the data lives and what to draw."""

    csv_path: str | Path
    x_column: str
    y_column: str
    ref_slope: float
    out_path: str | Path
    stderr_column: str | None = None
    ref_label: str | None = None


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    n_rows: int


def read_columns(path, names):
    """Columns by header name; every requested column must exist."""
    with open(path, "r", newline="", encoding="utf8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FigureError(f"{path}: empty file") from None
        missing = [n for n in names if n not in header]
        if missing:
            raise FigureError(f"{path}: missing columns {missing} (have {header})")
        idx = [header.index(n) for n in names]
        rows = [[float(row[i]) for i in idx] for row in reader if row]
    return [np.array(col) for col in zip(*rows)] if rows else [np.array([])] * len(names)


def fit_loglog(x, y, stderr=None) -> SlopeFit:
    """Weighted least squares of log y on log x (see module docstring)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise FigureError(f"need at least 3 rows, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise FigureError("log scale requires strictly positive x and y")
    lx, ly = np.log(x), np.log(y)
    if stderr is not None and np.all(np.asarray(stderr) > 0):
        w = (y / np.asarray(stderr, dtype=float)) ** 2
    else:
        w = np.ones_like(lx)
    wsum = w.sum()
    xbar = (w * lx).sum() / wsum
    ybar = (w * ly).sum() / wsum
    denom = (w * (lx - xbar) ** 2).sum()
    slope = (w * (lx - xbar) * (ly - ybar)).sum() / denom
    return SlopeFit(float(slope), float(ybar - slope * xbar), int(x.size))


def render_slope_figure(spec: SlopeFigureSpec) -> SlopeFit:
    """Fit, draw, and save the figure; returns the fit.

    Pure function of the CSV contents: rendering the same file twice
    yields the same fitted numbers.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [spec.x_column, spec.y_column]
    if spec.stderr_column:
        names.append(spec.stderr_column)
    cols = read_columns(spec.csv_path, names)
    x, y = cols[0], cols[1]
    stderr = cols[2] if spec.stderr_column else None
    fit = fit_loglog(x, y, stderr)

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if stderr is not None:
        ax.errorbar(x, y, yerr=stderr, fmt="o", ms=4, capsize=3, label="data")
    else:
        ax.plot(x, y, "o", ms=4, label="data")
    grid = np.linspace(np.log(x.min()), np.log(x.max()), 50)
    ax.plot(np.exp(grid), np.exp(fit.intercept + fit.slope * grid), "-",
            label=f"fit: slope {fit.slope:.4f}")
    anchor = fit.intercept + fit.slope * grid[0]
    ref = anchor + spec.ref_slope * (grid - grid[0])
    label = spec.ref_label or f"reference slope {spec.ref_slope:g}"
    ax.plot(np.exp(grid), np.exp(ref), "--", label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(spec.x_column)
    ax.set_ylabel(spec.y_column)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return fit
