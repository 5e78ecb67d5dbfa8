"""Lipschitz regularization of Hoelder functions by infimal convolution.

For a scalar function g and a penalty weight lambda > 0 the regularized
function is

    g_lam(x) = inf_t [ g(x + t) + ||t|| / lambda ],

a 1/lambda-Lipschitz minorant of g whose gap to g is controlled by the
Hoelder data:  0 <= g - g_lam <= (1-a) a^{a/(1-a)} [g]^{1/(1-a)} lam^{a/(1-a)}
for exponent a < 1.  The infimum is computed by multi-start directional
search restricted to the finite-dimensional span the function actually
depends on (the penalty is isotropic, so for such functions nothing is
lost), which makes the search certified rather than heuristic.  Returned
values are upper approximations of the true infimum and can only decrease
when the search is refined.

The scalarization g_u(x) = <u, f(x)> turns a vector-valued drift into the
scalar inputs these routines expect without increasing the Hoelder data.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .streams import substream


class RadiusWarning(UserWarning):
    """Search radius too small to certify exactness of the restriction."""


@dataclass(frozen=True, eq=False)
class ScalarHolderFn:
    """Scalar function with certified Hoelder metadata.

    ``fn`` maps coefficient arrays of shape (..., dim) to shape (...).
    ``span`` (optional, orthonormal rows) is the subspace the function
    depends on; the infimal-convolution search runs inside it.
    ``sup_norm`` may be ``inf`` for unbounded functions.  ``features``
    lists pairs (w, offsets): the function is non-smooth on the
    hyperplanes <., w> = offset, and the search adds the radii where a
    ray crosses them as exact candidates (a cusp minimum sits below the
    resolution of any grid, so it must be hit exactly).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    alpha: float
    holder_seminorm: float
    sup_norm: float
    dim: int
    span: np.ndarray | None = None
    features: tuple = ()
    name: str = ""

    def __call__(self, x) -> np.ndarray | float:
        out = np.asarray(self.fn(np.asarray(x, dtype=float)))
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the directional infimal-convolution search."""

    radius: float | None = None  # None -> auto-certified radius
    n_directions: int = 32
    grid_points: int = 129
    refine_iters: int = 64
    seed: int = 0


def _search_radius(g: ScalarHolderFn, lam: float, x: np.ndarray,
                   search: SearchConfig) -> float:
    if search.radius is not None:
        r = float(search.radius)
        if np.isfinite(g.sup_norm) and r < 2.0 * lam * g.sup_norm:
            warnings.warn(
                "radius too small to certify the restricted search is exact",
                RadiusWarning, stacklevel=3)
        return r
    auto = 10.0 * float(np.linalg.norm(x)) + 10.0
    if np.isfinite(g.sup_norm):
        auto = max(auto, 2.0 * lam * g.sup_norm)
    return auto


def _directions(k: int, search: SearchConfig) -> np.ndarray:
    axes = np.concatenate([np.eye(k), -np.eye(k)], axis=0)
    if k == 1 or search.n_directions <= 0:
        return axes  # in one dimension every direction is already an axis
    rng = substream(search.seed, "mollify-directions", k)
    raw = rng.standard_normal((search.n_directions, k))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return np.concatenate([axes, raw / norms], axis=0)


def inf_convolution(g: ScalarHolderFn, lam: float, x, search: SearchConfig | None = None) -> float:
    """Upper approximation of g_lam(x) = inf_t [g(x+t) + ||t||/lambda].

    Multi-start directional search: coordinate axes of the active span
    plus seeded random directions, each refined radially by golden
    section inside the bracket around the best grid point.  When
    ``sup_norm`` is finite the auto radius 2*lambda*sup_norm makes the
    restriction exact (beyond it the penalty alone exceeds any possible
    gain over t = 0).
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    search = search or SearchConfig()
    x = np.asarray(x, dtype=float)
    span = g.span
    k = x.size if span is None else span.shape[0]
    best = float(g(x))  # t = 0 candidate, also the k = 0 answer
    if k == 0:
        return best
    radius = _search_radius(g, lam, x, search)
    dirs = _directions(k, search)
    if span is not None:
        dirs = dirs @ span  # unit directions inside the active span
    rr = np.linspace(0.0, radius, search.grid_points)

    def profile(r, direction):
        return g(x + np.multiply.outer(r, direction)) + np.asarray(r) / lam

    def kink_radii(direction) -> list[float]:
        out = []
        for w, offsets in g.features:
            w = np.asarray(w, dtype=float)
            dd = float(direction @ w)
            if abs(dd) < 1e-14:
                continue
            pos = float(x @ w)
            out.extend(r0 for s0 in offsets
                       if 0.0 < (r0 := (s0 - pos) / dd) <= radius)
        return out

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    for direction in dirs:
        for r0 in kink_radii(direction):
            best = min(best, float(profile(r0, direction)))
        vals = profile(rr, direction)
        i = int(np.argmin(vals))
        best = min(best, float(vals[i]))
        a, b = rr[max(i - 1, 0)], rr[min(i + 1, rr.size - 1)]
        c, d = b - invphi * (b - a), a + invphi * (b - a)
        fc, fd = float(profile(c, direction)), float(profile(d, direction))
        for _ in range(search.refine_iters):
            best = min(best, fc, fd)
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = float(profile(c, direction))
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = float(profile(d, direction))
        best = min(best, fc, fd)
    return best


def check_lipschitz(g: ScalarHolderFn, lam: float, pairs,
                    search: SearchConfig | None = None) -> float:
    """Max of |g_lam(x) - g_lam(y)| / ||x - y|| over the given pairs.

    The regularized function is 1/lambda-Lipschitz, so up to solver
    tolerance the result never exceeds 1/lambda.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one pair")
    worst = 0.0
    for x, y in pairs:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gap = np.linalg.norm(x - y)
        if gap == 0:
            raise ValueError("pairs must have x != y")
        vx = inf_convolution(g, lam, x, search)
        vy = inf_convolution(g, lam, y, search)
        worst = max(worst, abs(vx - vy) / gap)
    return worst


def gap_bound(alpha: float, holder_seminorm: float, lam: float) -> float:
    """Sharp upper bound (1-a) a^{a/(1-a)} [g]^{1/(1-a)} lam^{a/(1-a)} on g - g_lam."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    e = alpha / (1.0 - alpha)
    return (1.0 - alpha) * alpha**e * holder_seminorm ** (1.0 / (1.0 - alpha)) * lam**e


def check_gap(g: ScalarHolderFn, lam: float, points,
              search: SearchConfig | None = None) -> float:
    """Max of g(x) - g_lam(x) over the given points.

    Rejects alpha = 1, where the gap bound degenerates.  Because the
    solver over-approximates g_lam, the reported gap under-approximates
    the true one, so the sharp bound is never violated spuriously.
    """
    if g.alpha >= 1.0:
        raise ValueError("gap bound requires alpha < 1")
    worst = 0.0
    for x in points:
        x = np.asarray(x, dtype=float)
        worst = max(worst, float(g(x)) - inf_convolution(g, lam, x, search))
    return worst


def scalarize(f, u) -> ScalarHolderFn:
    """g(x) = <u, f(x)> for a unit vector u; inherits f's Hoelder data.

    ``f`` must expose ``alpha``, ``holder_seminorm``, ``sup_norm``,
    ``n_modes`` and ``active_span()`` (the drift catalog does).
    """
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise ValueError("u must be a unit vector")

    def fn(x):
        return np.tensordot(np.asarray(f(x)), u, axes=([-1], [0]))

    features = f.features() if hasattr(f, "features") else ()
    return ScalarHolderFn(fn=fn, alpha=f.alpha, holder_seminorm=f.holder_seminorm,
                          sup_norm=f.sup_norm, dim=f.n_modes, span=f.active_span(),
                          features=features, name=f"<u,{getattr(f, 'name', 'f')}>")


def tuned_lambda(alpha: float, holder_seminorm: float,
                 h_norm: float, h_cm_norm: float) -> float:
    """Penalty weight equalizing the two error terms of the interpolation.

    With lam = (||h|| / ||h||_cm)^{1-alpha} / [f], the Lipschitz term
    ||h|| / lam and the gap term lam^{a/(1-a)} ||h||_cm [f]^{1/(1-a)}
    coincide.
    """
    if holder_seminorm <= 0 or h_norm <= 0 or h_cm_norm <= 0:
        raise ValueError("inputs must be positive")
    return (h_norm / h_cm_norm) ** (1.0 - alpha) / holder_seminorm
