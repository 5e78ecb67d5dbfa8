import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regnoise import (RadiusWarning, ScalarHolderFn, SearchConfig, check_gap,
                      check_lipschitz, gap_bound, holder_profile, inf_convolution,
                      rank_one_drift, scalarize, sqrt_abs_profile, substream,
                      tuned_lambda)


def sqrt_fn():
    p = sqrt_abs_profile()
    return ScalarHolderFn(fn=lambda x: p(x[..., 0]), alpha=0.5, holder_seminorm=1.0,
                          sup_norm=float("inf"), dim=1,
                          features=((np.array([1.0]), p.kinks),), name="sqrt-abs")


def clipped_holder_fn(alpha=0.5):
    p = holder_profile(alpha)
    return ScalarHolderFn(fn=lambda x: p(x[..., 0]), alpha=alpha, holder_seminorm=1.0,
                          sup_norm=1.0, dim=1,
                          features=((np.array([1.0]), p.kinks),), name="holder")


def constant_fn(c, dim=3):
    return ScalarHolderFn(fn=lambda x: np.full(x.shape[:-1], c), alpha=0.5,
                          holder_seminorm=0.0, sup_norm=abs(c), dim=dim,
                          span=np.zeros((0, dim)), name="const")


def brute_force_1d(g, lam, x, lo=-10.0, hi=10.0, n=2_000_001):
    # independent oracle: dense scan of g(s) + |s - x|/lam over s
    s = np.linspace(lo, hi, n)
    return float((g(s[:, None]) + np.abs(s - x) / lam).min())


def test_constant_function_is_left_unchanged():
    g = constant_fn(3.5)
    for lam in (0.25, 1.0, 4.0):
        assert inf_convolution(g, lam, np.zeros(3)) == 3.5


def test_sqrt_oracle_values():
    g = sqrt_fn()
    oracle4 = brute_force_1d(g, 4.0, 1.0)
    assert oracle4 == pytest.approx(0.25, abs=1e-6)  # minimizer at the cusp s=0
    assert inf_convolution(g, 4.0, np.array([1.0])) == pytest.approx(oracle4, abs=1e-6)
    oracle1 = brute_force_1d(g, 1.0, 1.0)
    assert oracle1 == pytest.approx(1.0, abs=1e-6)  # penalty slope dominates
    assert inf_convolution(g, 1.0, np.array([1.0])) == pytest.approx(1.0, abs=1e-9)


def test_inf_convolution_rejects_bad_lambda():
    with pytest.raises(ValueError):
        inf_convolution(sqrt_fn(), 0.0, np.array([1.0]))


def test_radius_warning_when_uncertified():
    g = clipped_holder_fn()
    with pytest.warns(RadiusWarning):
        inf_convolution(g, 4.0, np.array([0.5]), SearchConfig(radius=1.0))


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-3, 3), lam=st.sampled_from([0.25, 1.0, 4.0]))
def test_envelope_never_exceeds_function(x, lam):
    g = clipped_holder_fn()
    assert inf_convolution(g, lam, np.array([x])) <= float(g(np.array([x]))) + 1e-15


def test_refinement_is_monotone_nonincreasing():
    g = sqrt_fn()
    x = np.array([1.7])
    vals = [inf_convolution(g, 2.0, x, SearchConfig(grid_points=2**k + 1, refine_iters=64))
            for k in range(4, 9)]
    for coarse, fine in zip(vals, vals[1:]):
        assert fine <= coarse + 1e-12


def test_check_lipschitz_constant_function():
    g = constant_fn(2.0)
    pairs = [(np.zeros(3), np.ones(3))]
    assert check_lipschitz(g, 1.0, pairs) == 0.0


def test_check_lipschitz_sqrt_attains_bound():
    # g_4(0) = 0 and g_4(1) = 1/4, so the (0,1) ratio attains 1/lambda
    g = sqrt_fn()
    ratio = check_lipschitz(g, 4.0, [(np.array([0.0]), np.array([1.0]))])
    assert ratio == pytest.approx(0.25, abs=1e-9)


def test_check_lipschitz_random_pairs_within_bound():
    g = clipped_holder_fn()
    rng = substream(21, "pairs")
    pairs = []
    while len(pairs) < 100:
        x, y = 2.0 * rng.standard_normal(2)
        if abs(x - y) > 1e-6:
            pairs.append((np.array([x]), np.array([y])))
    for lam in (0.25, 1.0, 4.0):
        assert check_lipschitz(g, lam, pairs) <= (1.0 + 1e-9) / lam
    with pytest.raises(ValueError):
        check_lipschitz(g, 1.0, [])


def test_check_gap_constant_and_inactive_cases():
    assert check_gap(constant_fn(1.0), 4.0, [np.zeros(3)]) == 0.0
    g = sqrt_fn()
    assert check_gap(g, 1.0, [np.array([1.0])]) == pytest.approx(0.0, abs=1e-9)


def test_check_gap_sqrt_within_sharp_bound():
    g = sqrt_fn()
    gap = check_gap(g, 4.0, [np.array([1.0])])
    assert gap == pytest.approx(0.75, abs=1e-6)
    assert gap <= gap_bound(0.5, 1.0, 4.0) == 1.0


def test_check_gap_rejects_alpha_one():
    g = ScalarHolderFn(fn=lambda x: x[..., 0], alpha=1.0, holder_seminorm=1.0,
                       sup_norm=float("inf"), dim=1)
    with pytest.raises(ValueError):
        check_gap(g, 1.0, [np.array([0.0])])


def test_scalarize_zero_and_constant():
    from regnoise import ZeroDrift, ConstantDrift
    u = np.array([1.0, 0.0, 0.0])
    gz = scalarize(ZeroDrift(3), u)
    assert gz(np.array([0.3, -1.0, 2.0])) == 0.0
    c = np.array([0.5, 1.0, 0.0])
    gc = scalarize(ConstantDrift(c), u)
    assert gc(np.array([9.0, 9.0, 9.0])) == pytest.approx(0.5, rel=1e-15)


def test_scalarize_requires_unit_vector():
    from regnoise import ZeroDrift
    with pytest.raises(ValueError):
        scalarize(ZeroDrift(3), np.array([1.0, 1.0, 0.0]))


def test_scalarized_drift_inherits_holder_data():
    drift = rank_one_drift(holder_profile(0.5), [0, 1, 0], [0, 0, 1])
    rng = substream(17, "scalarize-pairs")
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    g = scalarize(drift, u)
    assert g.alpha == 0.5 and g.holder_seminorm == drift.holder_seminorm
    x = 2.0 * rng.standard_normal((2000, 3))
    y = 2.0 * rng.standard_normal((2000, 3))
    ratios = np.abs(g(x) - g(y)) / np.linalg.norm(x - y, axis=1) ** 0.5
    assert ratios.max() <= drift.holder_seminorm + 1e-12


def test_scalarized_search_runs_in_active_span():
    drift = rank_one_drift(holder_profile(0.5), [0, 1, 0], [0, 0, 1])
    g = scalarize(drift, np.array([0.0, 0.0, 1.0]))
    assert g.span.shape == (1, 3)
    val = inf_convolution(g, 4.0, np.array([0.0, 1.0, 0.0]))
    # reduces to the clipped-holder envelope on the active coordinate
    oracle = brute_force_1d(clipped_holder_fn(), 4.0, 1.0)
    assert val == pytest.approx(oracle, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0.05, 0.95), seminorm=st.floats(0.1, 5.0),
       hn=st.floats(0.01, 10.0), hcm=st.floats(0.01, 10.0))
def test_tuning_identity_balances_both_terms(alpha, seminorm, hn, hcm):
    lam = tuned_lambda(alpha, seminorm, hn, hcm)
    lipschitz_term = hn / lam
    gap_term = lam ** (alpha / (1.0 - alpha)) * hcm * seminorm ** (1.0 / (1.0 - alpha))
    assert lipschitz_term == pytest.approx(gap_term, rel=1e-9)
