import math

import numpy as np
import pytest

from argos.design import build_design, enumerate_monomials, trim_degree
from argos.pipeline import (
    ETA_GRID,
    EquationModel,
    bic_score,
    bootstrap_ci,
    eta_supports,
    identify_system,
    percentile_rank_indices,
    point_estimate,
    select_final,
    _sparse_stage,
)
from argos.savgol import smooth_columns
from argos.systems import NoiseSpec, add_noise, get_system, integrate


@pytest.fixture(scope="module")
def linear2d_clean():
    d = get_system("linear2d")
    traj = integrate(d, [2.0, 0.0], n=5000, dt=0.01)
    return traj


# ------------------------------------------------------------------- BIC

def test_bic_unit_mean_square():
    for n in (50, 400):
        assert bic_score(rss=float(n), n=n, k=1) == pytest.approx(math.log(n))


def test_bic_extra_term_costs_log_n():
    n = 200
    rss = 37.5
    assert bic_score(rss, n, 4) - bic_score(rss, n, 3) == pytest.approx(math.log(n))


def test_bic_perfect_fit_sentinel():
    assert bic_score(0.0, 100, 3) == -math.inf


def test_bic_validates():
    with pytest.raises(ValueError):
        bic_score(-1.0, 10, 1)
    with pytest.raises(ValueError):
        bic_score(1.0, 3, 3)


def test_bic_ranks_like_gaussian_likelihood():
    # same ordering as -2*loglik + k*ln(n) with the MLE variance plugged in
    rng = np.random.default_rng(0)
    n = 120
    x = np.column_stack([np.ones(n), rng.normal(size=(n, 3))])
    y = x @ np.array([0.5, 2.0, 0.0, 0.0]) + 0.3 * rng.normal(size=n)

    def gaussian_ic(support):
        cols = [0] + [k for k in support]
        a = x[:, cols]
        beta, *_ = np.linalg.lstsq(a, y, rcond=None)
        rss = float(np.sum((y - a @ beta) ** 2))
        loglik = -0.5 * n * (math.log(2 * math.pi * rss / n) + 1)
        return -2 * loglik + (len(support) + 1) * math.log(n)

    supports = [(), (1,), (1, 2), (1, 2, 3)]
    mine = []
    for s in supports:
        cols = [0] + list(s)
        a = x[:, cols]
        beta, *_ = np.linalg.lstsq(a, y, rcond=None)
        rss = float(np.sum((y - a @ beta) ** 2))
        mine.append(bic_score(rss, n, len(s) + 1))
    oracle = [gaussian_ic(s) for s in supports]
    assert np.argsort(mine).tolist() == np.argsort(oracle).tolist()


# ------------------------------------------------------------------- eta grid

def test_eta_grid_values():
    np.testing.assert_allclose(ETA_GRID, 10.0 ** np.arange(-8.0, 2.0))
    assert len(ETA_GRID) == 10


def test_eta_supports_thresholding():
    # design-aligned vector; slot 0 is the constant column (never selected)
    beta = np.array([0.0, 0.5, 3e-8, -2.0])
    supports = eta_supports(beta)
    assert supports[0] == (1, 2, 3)   # eta = 1e-8 keeps the 3e-8 term
    assert supports[1] == (1, 3)      # eta = 1e-7 drops it
    assert supports[-1] == ()         # eta = 10 drops everything
    # supports are nested along the grid
    sets = [set(s) for s in supports]
    assert all(a >= b for a, b in zip(sets, sets[1:]))


def test_eta_supports_monotone_random():
    rng = np.random.default_rng(1)
    for _ in range(20):
        beta = np.concatenate([[0.0], rng.normal(size=9) * 10.0 ** rng.integers(-9, 2, 9)])
        sets = [set(s) for s in eta_supports(beta)]
        assert all(a >= b for a, b in zip(sets, sets[1:]))


# ------------------------------------------------------------------- ranks

def test_percentile_rank_indices_paper_values():
    assert percentile_rank_indices(2000, 0.05) == (50, 1951)


def test_percentile_rank_indices_small_b_rejected():
    with pytest.raises(ValueError):
        percentile_rank_indices(20, 0.05)
    assert percentile_rank_indices(40, 0.05) == (1, 40)


# ------------------------------------------------------------------- select

def test_select_final_rules():
    names = ("1", "x1", "x2")
    # kept: interval excludes zero, point inside
    # dropped: interval contains zero
    # dropped: point outside its interval
    point = np.array([0.0, 2.0, 0.3])
    lower = np.array([-0.1, 1.5, -0.1])
    upper = np.array([0.2, 2.5, 0.6])
    eq = select_final(point, lower, upper, names)
    assert eq.support == ("x1",)
    assert eq.coefficients == {"x1": 2.0}
    assert eq.intercept == 0.0

    point2 = np.array([0.0, 2.0, 0.3])
    lower2 = np.array([-0.1, 2.2, -0.1])
    upper2 = np.array([0.2, 3.0, 0.6])
    eq2 = select_final(point2, lower2, upper2, names)
    assert eq2.support == ()


def test_select_final_constant_term_supported():
    names = ("1", "x1")
    eq = select_final(np.array([0.25, 0.0]), np.array([0.2, -0.5]),
                      np.array([0.3, 0.5]), names)
    assert eq.support == ("1",)
    assert eq.intercept == 0.25


def test_select_final_residuals_match_fitted():
    rng = np.random.default_rng(2)
    design = np.column_stack([np.ones(30), rng.normal(size=(30, 2))])
    y = design @ np.array([0.0, 1.0, 0.0]) + 0.01 * rng.normal(size=30)
    point = np.array([0.0, 1.0, 0.0])
    lower = np.array([-0.1, 0.8, -0.2])
    upper = np.array([0.1, 1.2, 0.2])
    eq = select_final(point, lower, upper, ("1", "x1", "x2"),
                      design=design, response=y, bic=-5.0, method="lasso")
    np.testing.assert_array_equal(eq.residuals, y - eq.fitted)
    np.testing.assert_array_equal(eq.fitted, design @ np.array([0.0, 1.0, 0.0]))
    assert eq.bic == -5.0


def test_equation_model_invariant_supported_terms():
    # every supported term: interval excludes zero and contains the point
    rng = np.random.default_rng(3)
    names = tuple(f"x{i}" for i in range(1, 7))
    point = rng.normal(size=6)
    lower = point - rng.uniform(0.1, 1.0, 6)
    upper = point + rng.uniform(0.1, 1.0, 6)
    eq = select_final(point, lower, upper, names)
    for term in eq.support:
        lo, up, pt = eq.ci_lower[term], eq.ci_upper[term], eq.point_estimates[term]
        assert lo > 0 or up < 0
        assert lo <= pt <= up


# ------------------------------------------------------------------- point estimate

def test_point_estimate_recovers_synthetic_support():
    rng = np.random.default_rng(4)
    n = 400
    states = rng.normal(size=(n, 2))
    design = build_design(states, enumerate_monomials(2, 3))
    beta_true = np.zeros(len(design.basis))
    names = list(design.column_names)
    beta_true[names.index("x1")] = 2.0
    beta_true[names.index("x2^2")] = -1.5
    y = design.values @ beta_true + 1e-6 * rng.normal(size=n)
    pe = point_estimate(design, y, "lasso", seed=0)
    assert set(pe.support) == {names.index("x1"), names.index("x2^2")}
    assert pe.beta[names.index("x1")] == pytest.approx(2.0, rel=1e-4)
    assert pe.beta[names.index("x2^2")] == pytest.approx(-1.5, rel=1e-4)
    np.testing.assert_array_equal(pe.residuals, y - pe.fitted)


def test_point_estimate_intercept_only_on_pure_noise_mean():
    # constant response: every candidate coefficient is zero, intercept = mean
    rng = np.random.default_rng(5)
    states = rng.normal(size=(100, 2))
    design = build_design(states, enumerate_monomials(2, 2))
    y = np.full(100, 3.25)
    pe = point_estimate(design, y, "lasso", seed=1)
    assert pe.support == ()
    assert pe.beta[0] == pytest.approx(3.25)
    assert np.all(pe.beta[1:] == 0.0)


def test_point_estimate_noiseless_linear2d(linear2d_clean):
    # full pre-pipeline on clean data: smooth, build, trim, estimate
    traj = linear2d_clean
    X, Xdot, _ = smooth_columns(traj.states, 0.01)
    theta0 = build_design(X, enumerate_monomials(2, 5))
    y = Xdot[:, 0]
    beta0 = _sparse_stage(theta0.values, y, "lasso", 0, "init")
    theta1 = theta0.truncated(trim_degree(beta0, theta0.basis))
    pe = point_estimate(theta1, y, "lasso", seed=0)
    names = list(theta1.column_names)
    assert set(pe.support) == {names.index("x1"), names.index("x2")}
    assert pe.beta[names.index("x1")] == pytest.approx(-0.1, rel=0.01)
    assert pe.beta[names.index("x2")] == pytest.approx(2.0, rel=0.01)


# ------------------------------------------------------------------- bootstrap

def test_bootstrap_interval_covers_strong_signal():
    rng = np.random.default_rng(6)
    n = 300
    states = rng.normal(size=(n, 2))
    design = build_design(states, enumerate_monomials(2, 2))
    names = list(design.column_names)
    k_true = names.index("x1")
    y = 2.0 * design.values[:, k_true] + 0.01 * rng.normal(size=n)
    lower, upper = bootstrap_ci(design, y, "lasso", bootstrap_reps=200,
                                alpha=0.05, seed=3)
    assert lower[k_true] < 2.0 < upper[k_true]
    assert lower[k_true] > 0.0  # interval excludes zero


def test_bootstrap_zero_term_gives_degenerate_interval():
    rng = np.random.default_rng(7)
    n = 250
    states = rng.normal(size=(n, 2))
    design = build_design(states, enumerate_monomials(2, 2))
    names = list(design.column_names)
    y = 3.0 * design.values[:, names.index("x2")] + 0.005 * rng.normal(size=n)
    lower, upper = bootstrap_ci(design, y, "lasso", bootstrap_reps=100,
                                alpha=0.05, seed=4)
    k_noise = names.index("x1^2")
    # a term never selected has an all-zero replicate distribution
    assert lower[k_noise] == 0.0 and upper[k_noise] == 0.0


def test_bootstrap_deterministic():
    rng = np.random.default_rng(8)
    states = rng.normal(size=(80, 2))
    design = build_design(states, enumerate_monomials(2, 2))
    y = design.values[:, 1] + 0.05 * rng.normal(size=80)
    a = bootstrap_ci(design, y, "lasso", bootstrap_reps=50, seed=9)
    b = bootstrap_ci(design, y, "lasso", bootstrap_reps=50, seed=9)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_bootstrap_needs_twenty_rows():
    design = build_design(np.random.default_rng(0).normal(size=(10, 2)),
                          enumerate_monomials(2, 1))
    with pytest.raises(ValueError):
        bootstrap_ci(design, np.zeros(10), "lasso", bootstrap_reps=40)


# ------------------------------------------------------------------- identify

def _linear2d_noisy(n=400, snr=49.0, seed=0):
    d = get_system("linear2d")
    traj = integrate(d, [2.0, 0.0], n=n, dt=0.01)
    return add_noise(traj.states, NoiseSpec(snr, seed=seed))


def test_identify_deterministic_given_seed():
    noisy = _linear2d_noisy(n=300)
    a = identify_system(noisy, 0.01, method="lasso", seed=11, bootstrap_reps=60)
    b = identify_system(noisy, 0.01, method="lasso", seed=11, bootstrap_reps=60)
    assert a.supports() == b.supports()
    assert a.trimmed_degrees == b.trimmed_degrees
    assert a.chosen_windows == b.chosen_windows
    for ea, eb in zip(a.equations, b.equations):
        assert ea.coefficients == eb.coefficients
        assert ea.point_estimates == eb.point_estimates
        assert ea.ci_lower == eb.ci_lower
        assert ea.ci_upper == eb.ci_upper
        assert ea.bic == eb.bic
        assert np.array_equal(ea.residuals, eb.residuals)
        assert np.array_equal(ea.fitted, eb.fitted)


def test_identify_seed_changes_bootstrap_draws():
    noisy = _linear2d_noisy(n=300)
    a = identify_system(noisy, 0.01, method="lasso", seed=11, bootstrap_reps=60)
    c = identify_system(noisy, 0.01, method="lasso", seed=12, bootstrap_reps=60)
    assert any(
        a.equations[j].ci_lower != c.equations[j].ci_lower
        for j in range(2)
    )


def test_identify_constant_states_gives_intercept_only_models():
    x = np.tile([1.5, -2.0], (200, 1))
    ident = identify_system(x, 0.01, method="lasso", seed=0, bootstrap_reps=40)
    for eq in ident.equations:
        assert eq.support in ((), ("1",))
        assert not set(eq.support) - {"1"}


def test_identify_column_permutation_equivariance():
    noisy = _linear2d_noisy(n=1500, snr=math.inf)
    a = identify_system(noisy, 0.01, method="lasso", seed=5, bootstrap_reps=100)
    b = identify_system(noisy[:, ::-1], 0.01, method="lasso", seed=5,
                        bootstrap_reps=100)
    swap = {"x1": "x2", "x2": "x1"}
    for j in (0, 1):
        from_b = {swap.get(t, t) for t in b.equations[1 - j].support}
        assert set(a.equations[j].support) == from_b


def test_identify_validates_inputs():
    with pytest.raises(ValueError):
        identify_system(np.zeros((50, 2)), dt=0.0)
    with pytest.raises(ValueError):
        identify_system(np.zeros(50), dt=0.01)
    with pytest.raises(ValueError):
        identify_system(np.zeros((50, 2)), dt=0.01, method="ols")
    bad = np.zeros((50, 2))
    bad[3, 1] = np.nan
    with pytest.raises(ValueError):
        identify_system(bad, dt=0.01)


def test_identify_provenance_fields():
    noisy = _linear2d_noisy(n=250)
    ident = identify_system(noisy, 0.01, method="lasso", seed=3, bootstrap_reps=40)
    assert ident.n == 250
    assert ident.dim == 2
    assert ident.method == "lasso"
    assert ident.basis.degree == 5
    assert len(ident.trimmed_degrees) == 2
    assert all(1 <= d <= 5 for d in ident.trimmed_degrees)
    assert set(ident.timings) >= {"smooth_seconds", "design_seconds",
                                  "equation_seconds", "total_seconds"}
    assert all(len(eq.fitted) == 250 for eq in ident.equations)
