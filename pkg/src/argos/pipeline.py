"""End-to-end identification: smooth, fit, trim, refit, threshold, bootstrap.

Per equation the procedure is:

1. sparse fit (cross-validated on the default grid, then again on a grid
   refined around the first optimum) against the full degree-5 design;
2. trim the design to the highest total degree carrying a nonzero
   coefficient;
3. refit on the trimmed design, threshold the estimate over the eta grid,
   fit OLS on each resulting support and keep the minimum-BIC model as the
   point estimate;
4. resample rows with replacement 2000 times, redoing step 3 per replicate,
   and form 95% percentile confidence intervals from the replicate
   estimates (a term unselected in a replicate contributes zero);
5. keep the terms whose interval excludes zero and contains the point
   estimate.

The constant basis term is special only in that it is never penalized or
thresholded: its estimate is the OLS intercept, and it enters the final
model through the same interval rule as every other term.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_seed, make_rng, seed_seq
from .design import (
    MonomialBasis,
    build_design,
    enumerate_monomials,
    trim_degree,
)
from .errors import ArgosError, DegenerateGridError, SingularFitError
from .savgol import smooth_columns
from .sparse_reg import (
    OLSMomentScanner,
    PenaltySpec,
    _as_values,
    adaptive_weights,
    cross_validate,
    refine_lambda,
)

METHODS = ("lasso", "alasso")

# thresholds applied to the trimmed-stage estimate before OLS refitting
ETA_GRID = 10.0 ** np.arange(-8.0, 2.0)

DEFAULT_BOOTSTRAP_REPS = 2000
DEFAULT_ALPHA = 0.05
DEFAULT_DEGREE = 5


@dataclass(frozen=True)
class PointEstimate:
    """Minimum-BIC OLS model after eta thresholding.

    ``beta`` is aligned with the design columns; slot 0 (the constant
    column) holds the OLS intercept.  ``support`` lists the eta-selected
    column indices (never 0).
    """

    beta: np.ndarray
    support: tuple[int, ...]
    bic: float
    fitted: np.ndarray
    residuals: np.ndarray


@dataclass(frozen=True)
class EquationModel:
    """Final selection for one equation, with its bootstrap intervals."""

    support: tuple[str, ...]
    coefficients: dict[str, float]
    intercept: float
    point_estimates: dict[str, float]
    ci_lower: dict[str, float]
    ci_upper: dict[str, float]
    bic: float
    fitted: np.ndarray
    residuals: np.ndarray
    method: str


@dataclass(frozen=True)
class IdentifiedSystem:
    equations: tuple[EquationModel, ...]
    basis: MonomialBasis
    trimmed_degrees: tuple[int, ...]
    method: str
    dt: float
    n: int
    seed: int
    bootstrap_reps: int
    alpha: float
    chosen_windows: tuple[int, ...]
    timings: dict = field(compare=False)

    @property
    def dim(self) -> int:
        return self.basis.m

    def supports(self) -> tuple[frozenset[str], ...]:
        return tuple(frozenset(eq.support) for eq in self.equations)


def bic_score(rss: float, n: int, k: int) -> float:
    """n*ln(rss/n) + k*ln(n); a perfect fit returns -inf and wins ties."""
    if rss < 0:
        raise ValueError(f"rss must be >= 0, got {rss}")
    if not n > k >= 0:
        raise ValueError(f"need n > k >= 0, got n={n}, k={k}")
    if rss == 0.0:
        return -math.inf
    return n * math.log(rss / n) + k * math.log(n)


def _sparse_stage(values, y, method, seed, *tags):
    """Cross-validated sparse fit: default grid, then the refined grid.

    Returns the coefficient vector on the original scale (aligned with the
    design columns, constant slot zero).  A response with no signal yields
    the all-zero vector instead of an error so degenerate inputs flow
    through to the intercept-only model.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    try:
        if method == "lasso":
            spec = PenaltySpec.lasso()
        else:
            ridge0 = cross_validate(values, y, PenaltySpec.ridge(),
                                    seed=seed_seq(seed, *tags, "ridge0"))
            ridge1 = cross_validate(values, y, PenaltySpec.ridge(),
                                    seed=seed_seq(seed, *tags, "ridge1"),
                                    lambdas=refine_lambda(ridge0.lambda_star))
            spec = PenaltySpec.adaptive(adaptive_weights(ridge1.coef_star))
        fit0 = cross_validate(values, y, spec, seed=seed_seq(seed, *tags, "cv0"))
        fit1 = cross_validate(values, y, spec, seed=seed_seq(seed, *tags, "cv1"),
                              lambdas=refine_lambda(fit0.lambda_star))
        return fit1.coef_star
    except DegenerateGridError:
        return np.zeros(_as_values(values).shape[1])


def eta_supports(coefs, eta_grid=ETA_GRID) -> list[tuple[int, ...]]:
    """Distinct supports {k >= 1 : |coef_k| >= eta} over the eta grid.

    Supports are nested (larger eta, smaller support) and returned in grid
    order with duplicates removed.  The constant column (index 0) is never
    thresholded in or out; it is handled by the OLS intercept.
    """
    coefs = np.abs(np.asarray(coefs, dtype=float))
    out: list[tuple[int, ...]] = []
    seen = set()
    for eta in np.asarray(eta_grid, dtype=float):
        support = tuple(int(k) for k in np.flatnonzero(coefs >= eta) if k != 0)
        if support not in seen:
            seen.add(support)
            out.append(support)
    return out


def point_estimate(design, xdot, method: str, seed: int,
                   eta_grid=ETA_GRID) -> PointEstimate:
    """Sparse fit, eta thresholding, OLS per support, minimum-BIC winner.

    Never raises for degenerate selections: if every thresholded support is
    rank deficient or infeasible the intercept-only model is returned.
    """
    values = _as_values(design)
    y = np.asarray(xdot, dtype=float)
    n = values.shape[0]
    beta1 = _sparse_stage(values, y, method, seed, "stage")

    scanner = OLSMomentScanner(values, y)
    best = None
    for support in eta_supports(beta1, eta_grid):
        if len(support) + 1 >= n:
            continue
        try:
            coefficients, intercept, rss = scanner.fit(support)
        except SingularFitError:
            continue
        bic = bic_score(rss, n, len(support) + 1)
        if best is None or bic < best[0]:
            best = (bic, support, coefficients, intercept)
    if best is None:
        coefficients, intercept, rss = scanner.fit(())
        best = (bic_score(rss, n, 1), (), coefficients, intercept)

    bic, support, coefficients, intercept = best
    beta = coefficients.copy()
    beta[0] = intercept
    fitted = values @ beta
    return PointEstimate(beta=beta, support=support, bic=bic,
                         fitted=fitted, residuals=y - fitted)


def percentile_rank_indices(bootstrap_reps: int, alpha: float) -> tuple[int, int]:
    """1-indexed ranks (floor(B*alpha/2), B - floor(B*alpha/2) + 1)."""
    lo = int(math.floor(bootstrap_reps * alpha / 2.0))
    if lo < 1:
        raise ValueError(
            f"bootstrap_reps={bootstrap_reps} too small for alpha={alpha}; "
            f"need floor(B*alpha/2) >= 1"
        )
    return lo, bootstrap_reps - lo + 1


def bootstrap_ci(design, xdot, method: str, bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS,
                 alpha: float = DEFAULT_ALPHA, seed: int = 0):
    """Percentile confidence intervals from paired-row resampling.

    Each replicate redraws n rows with replacement (design row paired with
    its derivative value) and reruns the full point-estimate stage,
    including cross-validation.  Terms the replicate does not select
    contribute zero to the sampling distribution.  A failed replicate is
    retried with a fresh resample, capped at 3B total draws.
    """
    values = _as_values(design)
    y = np.asarray(xdot, dtype=float)
    n = values.shape[0]
    if n < 20:
        raise ValueError(f"bootstrap needs at least 20 rows, got {n}")
    lo_rank, up_rank = percentile_rank_indices(bootstrap_reps, alpha)

    betas = np.empty((bootstrap_reps, values.shape[1]))
    draws = 0
    for b in range(bootstrap_reps):
        attempt = 0
        while True:
            if draws >= 3 * bootstrap_reps:
                raise ArgosError(
                    f"bootstrap exhausted {draws} draws before completing "
                    f"{bootstrap_reps} replicates"
                )
            idx = make_rng(seed, "resample", b, attempt).integers(0, n, size=n)
            draws += 1
            try:
                replicate = point_estimate(values[idx], y[idx], method,
                                           derive_seed(seed, "fit", b, attempt))
            except ArgosError:
                attempt += 1
                continue
            betas[b] = replicate.beta
            break
    ordered = np.sort(betas, axis=0)
    return ordered[lo_rank - 1], ordered[up_rank - 1]


def select_final(point_beta, lower, upper, names, *, design=None, response=None,
                 bic: float = math.nan, method: str = "lasso") -> EquationModel:
    """Keep terms whose interval excludes zero and contains the point estimate."""
    point_beta = np.asarray(point_beta, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    names = tuple(names)
    if not (point_beta.shape == lower.shape == upper.shape == (len(names),)):
        raise ValueError("point estimates, intervals, and names must align")

    keep = ((lower > 0) | (upper < 0)) & (lower <= point_beta) & (point_beta <= upper)
    final_beta = np.where(keep, point_beta, 0.0)
    support = tuple(names[k] for k in np.flatnonzero(keep))
    coefficients = {names[k]: float(point_beta[k]) for k in np.flatnonzero(keep)}

    if design is not None and response is not None:
        values = _as_values(design)
        fitted = values @ final_beta
        residuals = np.asarray(response, dtype=float) - fitted
    else:
        fitted = np.empty(0)
        residuals = np.empty(0)

    return EquationModel(
        support=support,
        coefficients=coefficients,
        intercept=coefficients.get("1", 0.0),
        point_estimates={nm: float(v) for nm, v in zip(names, point_beta)},
        ci_lower={nm: float(v) for nm, v in zip(names, lower)},
        ci_upper={nm: float(v) for nm, v in zip(names, upper)},
        bic=float(bic),
        fitted=fitted,
        residuals=residuals,
        method=method,
    )


def identify_system(x_noisy, dt: float, method: str = "lasso",
                    degree: int = DEFAULT_DEGREE, seed: int = 0,
                    bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS,
                    alpha: float = DEFAULT_ALPHA) -> IdentifiedSystem:
    """Identify sparse governing equations from a noisy state matrix.

    ``x_noisy`` is the n x m matrix of (possibly noisy) state measurements
    on a uniform time grid with spacing ``dt``.  Deterministic given
    (x_noisy, dt, method, seed): every stochastic stage (CV folds, bootstrap
    resamples) draws from a stream derived from the seed, the equation
    index, and a stage tag.  Wall-clock timings land in ``timings`` and are
    excluded from equality comparisons.
    """
    x_noisy = np.asarray(x_noisy, dtype=float)
    if x_noisy.ndim != 2:
        raise ValueError("x_noisy must be a 2-d array (n rows, m state columns)")
    n, m = x_noisy.shape
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not np.all(np.isfinite(x_noisy)):
        raise ValueError("x_noisy must be finite")

    timings: dict = {}
    t_start = time.perf_counter()
    X, Xdot, windows = smooth_columns(x_noisy, dt)
    timings["smooth_seconds"] = time.perf_counter() - t_start

    t_design = time.perf_counter()
    basis = enumerate_monomials(m, degree)
    theta0 = build_design(X, basis)
    timings["design_seconds"] = time.perf_counter() - t_design

    equations = []
    degrees = []
    eq_seconds = []
    for j in range(m):
        t_eq = time.perf_counter()
        y = Xdot[:, j]
        try:
            beta0 = _sparse_stage(theta0.values, y, method, seed, j, "init")
            d1 = trim_degree(beta0, basis)
            theta1 = theta0.truncated(d1)
            pe = point_estimate(theta1, y, method, derive_seed(seed, j, "point"))
            lower, upper = bootstrap_ci(theta1, y, method, bootstrap_reps, alpha,
                                        seed=derive_seed(seed, j, "boot"))
            eq = select_final(pe.beta, lower, upper, theta1.column_names,
                              design=theta1.values, response=y,
                              bic=pe.bic, method=method)
        except ArgosError as exc:
            raise ArgosError(f"equation {j + 1} failed: {exc}") from exc
        equations.append(eq)
        degrees.append(d1)
        eq_seconds.append(time.perf_counter() - t_eq)

    timings["equation_seconds"] = tuple(eq_seconds)
    timings["total_seconds"] = time.perf_counter() - t_start
    return IdentifiedSystem(
        equations=tuple(equations),
        basis=basis,
        trimmed_degrees=tuple(degrees),
        method=method,
        dt=float(dt),
        n=n,
        seed=int(seed),
        bootstrap_reps=int(bootstrap_reps),
        alpha=float(alpha),
        chosen_windows=windows,
        timings=timings,
    )
