import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regnoise import (build_basis, cm_bound_constant, cm_norm, initial_state, law_at,
                      mc_average_2pt, mc_average_4pt, mode_variance, ou_step,
                      rank_one_drift, rn_log_density, holder_profile, substream)


def unit_basis(lam=1.0):
    return build_basis(1, "custom", 1, custom_eigenvalues=[lam])


def test_mode_variance_at_zero_time():
    assert mode_variance(1.0, 0.0, 0.0) == 0.0


def test_mode_variance_stationary_limit():
    assert mode_variance(1.0, 0.0, 20.0) == pytest.approx(0.5, abs=1e-8)


def test_mode_variance_frozen_value():
    # 0.125 (1 - e^{-1}) at 30-digit precision
    assert mode_variance(2.0, 1.0, 0.25) == pytest.approx(0.079015069853569709801, rel=1e-15)


def test_mode_variance_stable_for_stiff_modes():
    # t*lambda ~ 1e-12: plain 1-exp cancels catastrophically, expm1 does not
    v = mode_variance(1e6, 0.0, 1e-18)
    assert v == pytest.approx(1e-18, rel=1e-9)


def test_mode_variance_rejects_bad_input():
    with pytest.raises(ValueError):
        mode_variance(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        mode_variance(1.0, 0.0, -1.0)


def test_ou_step_small_dt_is_near_identity():
    state = initial_state(unit_basis(), 0.0, seed=7)
    state = ou_step(state, 1.0)
    before = state.coeffs.copy()
    after = ou_step(state, 1e-14)
    assert abs(after.coeffs[0] - before[0]) < 1e-6
    with pytest.raises(ValueError):
        ou_step(state, 0.0)


def test_ou_marginal_variance_over_many_streams():
    # single mode lambda=1, steps to t=5: empirical variance within
    # 5 standard errors of (1 - e^{-10})/2
    basis = unit_basis()
    n_paths = 50_000
    vals = np.empty(n_paths)
    for i in range(n_paths):
        state = initial_state(basis, 0.0, 123, "var-check", i)
        for _ in range(5):
            state = ou_step(state, 1.0)
        vals[i] = state.coeffs[0]
    target = 0.5 * (1.0 - math.exp(-10.0))
    emp = vals.var(ddof=1)
    se = target * math.sqrt(2.0 / (n_paths - 1))
    assert abs(emp - target) < 5 * se


def test_ou_two_time_covariance():
    # Cov(Z_s, Z_t) = e^{-lambda (t-s)} q(s); brute-force two-time MC
    basis = unit_basis(2.0)
    s, t = 0.4, 1.1
    n_paths = 50_000
    zs = np.empty(n_paths)
    zt = np.empty(n_paths)
    for i in range(n_paths):
        state = initial_state(basis, 0.0, 99, "cov-check", i)
        state = ou_step(state, s)
        zs[i] = state.coeffs[0]
        state = ou_step(state, t - s)
        zt[i] = state.coeffs[0]
    target = math.exp(-2.0 * (t - s)) * mode_variance(2.0, 0.0, s)
    emp = np.cov(zs, zt, ddof=1)[0, 1]
    se = math.sqrt((mode_variance(2.0, 0.0, s) * mode_variance(2.0, 0.0, t)
                    + target**2) / n_paths)
    assert abs(emp - target) < 5 * se


def test_cm_norm_zero_vector():
    basis = build_basis(1, "dirichlet", 8)
    assert cm_norm(basis, 0.0, 1.0, np.zeros(8)) == 0.0


def test_cm_norm_single_mode_frozen_value():
    # sqrt(2 e^{-2} / (1 - e^{-2})) at 30-digit precision
    basis = unit_basis()
    assert cm_norm(basis, 0.0, 1.0, [1.0]) == pytest.approx(0.55949556343132096693, rel=1e-14)
    with pytest.raises(ValueError):
        cm_norm(basis, 0.0, 0.0, [1.0])


@settings(max_examples=60, deadline=None)
@given(gamma=st.sampled_from([0.0, 0.5, 1.0]),
       texp=st.integers(-10, 0),
       seed=st.integers(0, 1000))
def test_cm_inequality_is_exact(gamma, texp, seed):
    # ||Q_t^{-1/2} e^{tA} h|| <= sqrt(2 C(gamma)) t^{-(1+gamma)/2} ||h||,
    # an exact inequality once C(gamma) is the true supremum
    basis = build_basis(1, "dirichlet", 32)
    t = 2.0**texp
    h = substream(seed, "cm-h").standard_normal(32)
    bound = math.sqrt(2.0 * cm_bound_constant(gamma)) * t ** (-(1.0 + gamma) / 2.0)
    assert cm_norm(basis, gamma, t, h) <= bound * np.linalg.norm(h)


def test_cm_bound_constant_values():
    assert cm_bound_constant(0.0) == pytest.approx(0.5, abs=1e-6)
    # oracle: stationary point of x^2/(e^{2x}-1) solves x = 1 - e^{-2x};
    # bisection on that equation, then evaluate
    lo, hi = 0.5, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid - 1.0 + math.exp(-2.0 * mid) < 0:
            lo = mid
        else:
            hi = mid
    xstar = 0.5 * (lo + hi)
    oracle = xstar**2 / (math.exp(2.0 * xstar) - 1.0)
    assert oracle == pytest.approx(0.16190255947297871491, rel=1e-10)
    assert cm_bound_constant(1.0) == pytest.approx(oracle, abs=1e-4)


def test_cm_bound_objective_is_decreasing_at_gamma_zero():
    xs = np.linspace(1e-6, 10.0, 1000)
    vals = xs / np.expm1(2.0 * xs)
    assert np.all(np.diff(vals) < 0)


def test_rn_log_density_trivial_shift():
    basis = build_basis(1, "dirichlet", 4)
    z = substream(3, "z").standard_normal(4)
    assert rn_log_density(basis, 0.0, 0.5, np.zeros(4), z) == 0.0


def test_rn_log_density_single_mode_identity():
    basis = unit_basis()
    c, t = 0.7, 0.9
    q = mode_variance(1.0, 0.0, t)
    val = rn_log_density(basis, 0.0, t, [c], [c])
    assert val == pytest.approx(0.5 * c**2 / q, rel=1e-14)


def test_rn_density_normalizes():
    basis = build_basis(1, "dirichlet", 6)
    gamma, t = 0.0, 0.5
    law = law_at(basis, gamma, t)
    h = 0.3 * basis.semigroup(t)  # comfortably inside the Cameron-Martin ball
    z = law.sample(50_000, substream(11, "norm-check"))
    w = np.exp([rn_log_density(basis, gamma, t, h, zi) for zi in z])
    se = w.std(ddof=1) / math.sqrt(len(w))
    assert abs(w.mean() - 1.0) < 5 * se


def test_rn_density_shifts_expectations():
    # E[g(z) e^{log density}] = E[g(z + h)] (change of variables)
    basis = build_basis(1, "dirichlet", 4)
    gamma, t = 0.5, 0.4
    law = law_at(basis, gamma, t)
    h = np.array([0.05, -0.02, 0.01, 0.0])
    z = law.sample(80_000, substream(12, "girsanov"))
    g = lambda x: np.tanh(x[..., 0] + 0.5 * x[..., 1])
    w = np.exp(np.array([rn_log_density(basis, gamma, t, h, zi) for zi in z]))
    left = g(z) * w
    right = g(z + h)
    se = math.sqrt(left.var(ddof=1) / len(z) + right.var(ddof=1) / len(z))
    assert abs(left.mean() - right.mean()) < 5 * se


def test_mc_average_2pt_constant_function_is_zero():
    basis = build_basis(1, "dirichlet", 4)
    f = lambda x: np.ones_like(x)
    est = mc_average_2pt(f, basis, 0.0, 0.1, [1, 0, 0, 0], [0, 1, 0, 0], 500, seed=5)
    assert est.estimate == 0.0 and est.stderr == 0.0


def test_mc_average_2pt_equal_shifts_is_zero():
    basis = build_basis(1, "dirichlet", 4)
    drift = rank_one_drift(holder_profile(0.5), [1, 0, 0, 0], [1, 0, 0, 0])
    h = [0.4, 0.0, 0.1, 0.0]
    est = mc_average_2pt(drift, basis, 0.0, 0.1, h, h, 500, seed=5)
    assert est.estimate == 0.0


def test_mc_average_2pt_identity_map_matches_closed_form():
    basis = build_basis(1, "dirichlet", 4)
    t = 0.3
    h1 = np.array([0.5, 0.0, -0.2, 0.0])
    h2 = np.array([0.1, 0.3, 0.0, 0.0])
    est = mc_average_2pt(lambda x: x, basis, 0.0, t, h1, h2, 40_000, seed=6)
    exact = np.linalg.norm(basis.semigroup(t) * (h1 - h2))
    assert abs(est.estimate - exact) < 5 * max(est.stderr, 1e-12)


def test_mc_average_4pt_annihilates_affine_maps():
    basis = build_basis(1, "dirichlet", 4)
    f = lambda x: 2.0 * x + 1.0
    est = mc_average_4pt(f, basis, 0.0, 0.2, [1, 0, 0, 0], [0, 1, 0, 0],
                         [0, 0, 1, 0], 500, seed=7)
    assert est.estimate == pytest.approx(0.0, abs=1e-12)


def test_mc_average_4pt_coincident_corner_is_zero():
    basis = build_basis(1, "dirichlet", 4)
    drift = rank_one_drift(holder_profile(0.5), [1, 0, 0, 0], [1, 0, 0, 0])
    h1 = np.array([0.3, 0.0, 0.0, 0.0])
    h2 = np.array([0.1, 0.2, 0.0, 0.0])
    # h3 = h1 makes the four arguments cancel pairwise under common samples
    est = mc_average_4pt(drift, basis, 0.0, 0.2, h1, h2, h1, 500, seed=8)
    assert est.estimate == 0.0


def test_mc_average_4pt_agrees_with_oversampled_oracle():
    basis = build_basis(1, "dirichlet", 4)
    drift = rank_one_drift(holder_profile(0.5), [1, 0, 0, 0], [1, 0, 0, 0])
    args = (drift, basis, 0.0, 0.15, [0.2, 0, 0, 0], [0.1, 0.05, 0, 0], [0.15, 0, 0.05, 0])
    est = mc_average_4pt(*args, 20_000, seed=9)
    oracle = mc_average_4pt(*args, 200_000, seed=10)
    tol = 5 * math.sqrt(est.stderr**2 + oracle.stderr**2)
    assert abs(est.estimate - oracle.estimate) < tol


def test_mc_average_requires_samples():
    basis = build_basis(1, "dirichlet", 2)
    with pytest.raises(ValueError):
        mc_average_2pt(lambda x: x, basis, 0.0, 0.1, [1, 0], [0, 1], 1, seed=1)
