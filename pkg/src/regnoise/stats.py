"""Estimation helpers shared by the Monte Carlo probes.

L^m norms of sampled path functionals with delta-method standard errors,
weighted least-squares fits in log-log coordinates, paired bootstrap
confidence intervals for fitted slopes, and the tail-increment growth
exponent used to classify partial sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LmEstimate:
    value: float
    stderr: float
    moment: float
    n_samples: int


def lm_norm(samples, m) -> LmEstimate:
    """(E |Y|^m)^{1/m} from i.i.d. samples of |Y|, with standard error.

    m = inf returns the empirical maximum with zero stderr.
    """
    y = np.asarray(samples, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise ValueError("samples must be a nonempty 1-d array")
    if np.isinf(m):
        return LmEstimate(float(y.max()), 0.0, float("inf"), y.size)
    if m < 1:
        raise ValueError("moment must be >= 1")
    p = y**m
    mean = p.mean()
    est = mean ** (1.0 / m)
    if y.size < 2 or mean == 0.0:
        return LmEstimate(float(est), 0.0, float(m), y.size)
    se_mean = p.std(ddof=1) / np.sqrt(y.size)
    # d/dx x^{1/m} at the sample mean
    stderr = est / (m * mean) * se_mean
    return LmEstimate(float(est), float(stderr), float(m), y.size)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    n_points: int


def loglog_fit(x, y, stderr=None) -> FitResult:
    """Weighted least squares of log y against log x.

    Weights are 1/sigma_log^2 with sigma_log = stderr/y (the delta method
    for the log transform); without stderr the fit is ordinary least
    squares.  Rows with nonpositive x or y are rejected.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 3:
        raise ValueError("need at least 3 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit requires positive data")
    lx, ly = np.log(x), np.log(y)
    if stderr is None:
        w = np.ones_like(lx)
    else:
        s = np.asarray(stderr, dtype=float)
        if np.any(s <= 0):
            w = np.ones_like(lx)
        else:
            w = (y / s) ** 2
    wsum = w.sum()
    xbar = (w * lx).sum() / wsum
    ybar = (w * ly).sum() / wsum
    denom = (w * (lx - xbar) ** 2).sum()
    slope = (w * (lx - xbar) * (ly - ybar)).sum() / denom
    return FitResult(float(slope), float(ybar - slope * xbar), x.size)


def bootstrap_slope_ci(levels, samples: np.ndarray, m: float, n_boot: int,
                       rng: np.random.Generator, ci: float = 0.95):
    """Percentile bootstrap CI for the log-log slope of L^m norms vs level.

    ``samples`` has shape (n_levels, n_paths); the same path resample is
    applied at every level (paths are coupled across levels by common
    random numbers, so the paired bootstrap is the honest one).
    """
    levels = np.asarray(levels, dtype=float)
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] != levels.size:
        raise ValueError("samples must have one row per level")
    n_paths = samples.shape[1]
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n_paths, size=n_paths)
        norms = np.array([lm_norm(row[idx], m).value for row in samples])
        if np.any(norms <= 0):
            slopes[b] = np.nan
            continue
        slopes[b] = loglog_fit(levels, norms).slope
    slopes = slopes[~np.isnan(slopes)]
    if slopes.size == 0:
        return float("nan"), float("nan")
    tail = (1.0 - ci) / 2.0
    return (float(np.quantile(slopes, tail)), float(np.quantile(slopes, 1.0 - tail)))


def increment_growth_exponent(cutoffs, partial_sums) -> float:
    """Growth exponent of partial sums, fitted on tail increments.

    For S(n) ~ C + c n^eps the raw log-log fit of S is biased by the
    additive constant; the increments S(c_{i+1}) - S(c_i) scale like the
    window midpoint to the power eps, so their fit recovers eps directly.
    """
    c = np.asarray(cutoffs, dtype=float)
    s = np.asarray(partial_sums, dtype=float)
    if c.size < 4:
        raise ValueError("need at least 4 cutoffs to fit increments")
    inc = np.diff(s)
    mids = np.sqrt(c[1:] * c[:-1])
    if np.any(inc <= 0):
        raise ValueError("partial sums must be strictly increasing")
    return loglog_fit(mids, inc).slope
