"""Penalized linear regression: lasso and ridge paths with cross-validation.

Conventions, fixed for reproducibility:

* Predictors are standardized to mean 0 and standard deviation 1 using the
  n-denominator scale; the intercept is never penalized and is recovered
  analytically after fitting; reported coefficients are on the original
  scale.
* The penalty applies to standardized coefficients, so for the plain lasso
  every predictor is penalized equally regardless of its units.
* The objective solved in standardized coordinates is
  (1/2n)||y - Zb||^2 + lam * sum_k w_k |b_k|^q.
* The default grid has 100 log-spaced points from lam_max down to
  lam_max * r, with r = 1e-4 when n > p and 1e-2 otherwise, where lam_max
  is the smallest lambda with an all-zero lasso solution (weighted when
  adaptive weights are supplied).
* Cross-validation minimizes the mean out-of-fold MSE; ties resolve to the
  larger lambda (the sparser model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._cd_kernel import _kkt_violation, cd_path
from .errors import ConvergenceError, DegenerateGridError, SingularFitError

COEF_TOL = 1e-9       # max coefficient update, standardized scale
KKT_TOL = 1e-6        # public optimality certificate
_KKT_GOAL = 1e-7      # internal target, headroom under the certificate
MAX_SWEEPS = 100_000
WEIGHT_CAP = 1e8
DEFAULT_GRID_SIZE = 100

# constant-column sentinel: population sd at or below float jitter relative
# to the column's magnitude
_CONST_COL_RTOL = 1e-12


@dataclass(frozen=True)
class Standardization:
    """Column moments needed to map standardized fits back to data scale."""

    column_means: np.ndarray
    column_scales: np.ndarray     # inf for flagged constant columns
    response_mean: float
    constant_mask: np.ndarray


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty exponent and per-coefficient weights of the regression."""

    q: int
    weights: np.ndarray | None = None   # None means unit weights
    intercept_penalized: bool = False

    def __post_init__(self):
        if self.q not in (1, 2):
            raise ValueError(f"q must be 1 or 2, got {self.q}")
        if self.intercept_penalized:
            raise ValueError("the intercept is never penalized")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite and non-negative")
            if self.q == 2 and not np.all(w == 1.0):
                raise ValueError("ridge supports unit weights only")
            object.__setattr__(self, "weights", w)

    @classmethod
    def lasso(cls) -> "PenaltySpec":
        return cls(q=1)

    @classmethod
    def ridge(cls) -> "PenaltySpec":
        return cls(q=2)

    @classmethod
    def adaptive(cls, weights) -> "PenaltySpec":
        return cls(q=1, weights=np.asarray(weights, dtype=float))


@dataclass(frozen=True)
class PathFit:
    """Solutions along a descending lambda grid plus the CV trace."""

    lambdas: np.ndarray
    coefficients: np.ndarray      # p x L, original scale
    intercepts: np.ndarray
    cv_mse: np.ndarray
    cv_se: np.ndarray
    lambda_star: float
    lambda_star_index: int

    @property
    def coef_star(self) -> np.ndarray:
        return self.coefficients[:, self.lambda_star_index]

    @property
    def intercept_star(self) -> float:
        return float(self.intercepts[self.lambda_star_index])


@dataclass(frozen=True)
class OLSFit:
    coefficients: np.ndarray      # full length, zeros off support
    intercept: float
    residuals: np.ndarray
    rss: float


def _as_values(design) -> np.ndarray:
    values = getattr(design, "values", design)
    return np.asarray(values, dtype=float)


def standardize(design, y, intercept_col: bool = True):
    """Center and unit-scale predictors; drop the constant column.

    With ``intercept_col`` the design's first column is the constant term
    and is removed (its effect is restored analytically via the intercept).
    Zero-variance columns among the rest are flagged and mapped to zero
    columns (scale sentinel inf), which keeps every downstream fit defined.
    """
    values = _as_values(design)
    y = np.asarray(y, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 rows, got {n}")
    if y.shape != (n,):
        raise ValueError(f"y must have shape ({n},), got {y.shape}")
    x = values[:, 1:] if intercept_col else values
    means = x.mean(axis=0)
    centered = x - means
    scales = np.sqrt(np.mean(centered ** 2, axis=0))
    flagged = scales <= _CONST_COL_RTOL * np.maximum(np.abs(means), 1.0)
    safe = np.where(flagged, np.inf, scales)
    z = centered / safe
    ybar = float(y.mean())
    return z, y - ybar, Standardization(
        column_means=means, column_scales=safe,
        response_mean=ybar, constant_mask=flagged,
    )


def destandardize(coef_std: np.ndarray, std: Standardization):
    """Map standardized-space coefficients to original scale plus intercept.

    Accepts a vector or a (p x L) path matrix; returns (coefficients,
    intercept(s)) on the scale of the raw predictors.
    """
    if coef_std.ndim == 1:
        coef = coef_std / std.column_scales
        intercept = std.response_mean - float(std.column_means @ coef)
        return coef, intercept
    coef = coef_std / std.column_scales[:, None]
    intercepts = std.response_mean - std.column_means @ coef
    return coef, intercepts


def lambda_grid(std_design, centered_y, num: int = DEFAULT_GRID_SIZE,
                weights=None) -> np.ndarray:
    """Descending log-spaced grid from lam_max down to lam_max * r.

    lam_max = max_k |<z_k, y>| / (n w_k), the entry point of the (weighted)
    lasso path.  Raises :class:`DegenerateGridError` when the response
    carries no signal (lam_max = 0).
    """
    z = np.asarray(std_design, dtype=float)
    y = np.asarray(centered_y, dtype=float)
    n, p = z.shape
    corr = np.abs(z.T @ y) / n
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = np.where(w > 0, corr / w, 0.0)
    lam_max = float(np.max(corr)) if corr.size else 0.0
    if not lam_max > 0:
        raise DegenerateGridError("lambda_max is zero; response has no signal")
    ratio = 1e-4 if n > p else 1e-2
    return np.geomspace(lam_max, lam_max * ratio, num)


def refine_lambda(lambda0_star: float, num: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """100 log-spaced points on [lambda0*/10, 1.1*lambda0*], descending."""
    if not lambda0_star > 0:
        raise ValueError(f"lambda0_star must be positive, got {lambda0_star}")
    return np.geomspace(1.1 * lambda0_star, lambda0_star / 10.0, num)


def adaptive_weights(pilot, nu: float = 1.0) -> np.ndarray:
    """w_k = 1/|pilot_k|^nu, capped so zero pilots stay finite."""
    pilot = np.asarray(pilot, dtype=float)
    with np.errstate(divide="ignore"):
        w = 1.0 / np.abs(pilot) ** nu
    return np.minimum(w, WEIGHT_CAP)


def _lasso_path_std(z, yc, lambdas, weights, warm_start=None):
    n, p = z.shape
    gram = (z.T @ z) / n
    cy = (z.T @ yc) / n
    beta0 = np.zeros(p) if warm_start is None else np.asarray(warm_start, dtype=float)
    coefs, viol, sweeps = cd_path(
        gram, cy, np.asarray(lambdas, dtype=float), weights, beta0,
        COEF_TOL, _KKT_GOAL, KKT_TOL, MAX_SWEEPS,
    )
    worst = float(np.max(viol))
    if sweeps < 0 or worst > KKT_TOL:
        raise ConvergenceError(worst, abs(int(sweeps)))
    return coefs


def lasso_cd(std_design, centered_y, lam: float, weights=None,
             warm_start=None) -> np.ndarray:
    """Weighted lasso at one lambda via cyclic coordinate descent.

    The returned coefficients are in the standardized space of the input
    matrix and carry a KKT certificate: residual correlations are within
    ``KKT_TOL`` of the subgradient conditions, else the call raises
    :class:`ConvergenceError`.
    """
    z = np.asarray(std_design, dtype=float)
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    w = np.ones(z.shape[1]) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    yc = np.asarray(centered_y, dtype=float)
    return _lasso_path_std(z, yc, np.array([float(lam)]), w, warm_start)[:, 0]


def kkt_violation(std_design, centered_y, beta, lam: float, weights=None) -> float:
    """Worst-case KKT residual of a candidate lasso solution."""
    z = np.asarray(std_design, dtype=float)
    n, p = z.shape
    w = np.ones(p) if weights is None else np.asarray(weights, dtype=float)
    gram = (z.T @ z) / n
    cy = (z.T @ np.asarray(centered_y, dtype=float)) / n
    worst = _kkt_violation(gram, cy, np.asarray(beta, dtype=float), float(lam), w,
                           np.empty(p))
    return float(worst)


def _ridge_path_gram(gram, cy, lambdas):
    p = gram.shape[0]
    eigvals, eigvecs = np.linalg.eigh(gram)
    rotated = eigvecs.T @ cy
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas == 0.0) and eigvals[0] <= eigvals[-1] * p * np.finfo(float).eps:
        raise SingularFitError("ridge with lambda=0 on a rank-deficient design")
    # the floor only guards 0/0 from flagged all-zero columns
    denom = np.maximum(eigvals[:, None] + lambdas[None, :], np.finfo(float).tiny)
    return eigvecs @ (rotated[:, None] / denom)


def _ridge_path_std(z, yc, lambdas):
    n = z.shape[0]
    return _ridge_path_gram((z.T @ z) / n, (z.T @ yc) / n, lambdas)


def ridge_closed_form(std_design, centered_y, lam: float) -> np.ndarray:
    """Ridge solution (Z'Z/n + lam I)^-1 Z'y/n via an eigendecomposition."""
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    z = np.asarray(std_design, dtype=float)
    yc = np.asarray(centered_y, dtype=float)
    return _ridge_path_std(z, yc, np.array([float(lam)]))[:, 0]


def _assign_folds(n, folds, seed):
    rng = np.random.default_rng(seed)
    ids = np.repeat(np.arange(folds), np.diff(np.linspace(0, n, folds + 1).astype(int)))
    return ids[rng.permutation(n)]


class _Moments:
    """Second moments of precentered predictors and response.

    All cross-validation work happens in this space: standardizing a train
    subset, fitting the path from its Gram matrix, and scoring held-out rows
    are O(p^2) per lambda, independent of the row count.  Predictors and
    response are precentered by their full-sample means so the
    sum-minus-mean variance algebra stays numerically stable; model
    coefficients are unchanged by that shift and the intercept is restored
    at the end.
    """

    __slots__ = ("q", "s", "xy", "sy", "syy", "n")

    def __init__(self, xc, yc):
        self.q = xc.T @ xc
        self.s = xc.sum(axis=0)
        self.xy = xc.T @ yc
        self.sy = float(yc.sum())
        self.syy = float(yc @ yc)
        self.n = xc.shape[0]

    def minus(self, other):
        out = _Moments.__new__(_Moments)
        out.q = self.q - other.q
        out.s = self.s - other.s
        out.xy = self.xy - other.xy
        out.sy = self.sy - other.sy
        out.syy = self.syy - other.syy
        out.n = self.n - other.n
        return out


def _std_from_moments(mom, flag_floor):
    """Standardization quantities of a (train) subset from its moments.

    Returns (mu, s_inv, ybar, gram, cy): column means, inverse scales with
    zeros marking flagged constant columns, response mean, the standardized
    Gram Z'Z/n, and Z'y/n.
    """
    n = mom.n
    mu = mom.s / n
    var = np.maximum(np.diag(mom.q) / n - mu ** 2, 0.0)
    s = np.sqrt(var)
    flagged = s <= flag_floor
    s_inv = np.where(flagged, 0.0, 1.0 / np.where(flagged, 1.0, s))
    cov = mom.q / n - np.outer(mu, mu)
    gram = cov * np.outer(s_inv, s_inv)
    ybar = mom.sy / n
    cy = (mom.xy / n - mu * ybar) * s_inv
    return mu, s_inv, ybar, gram, cy


def _path_from_gram(gram, cy, lambdas, q, weights):
    """Standardized-space path solutions from precomputed moments."""
    if q == 1:
        w = np.ones(gram.shape[0]) if weights is None else weights
        beta0 = np.zeros(gram.shape[0])
        coefs, viol, sweeps = cd_path(
            gram, cy, lambdas, np.asarray(w, dtype=float), beta0,
            COEF_TOL, _KKT_GOAL, KKT_TOL, MAX_SWEEPS,
        )
        finite = viol[np.isfinite(viol)]
        worst = float(np.max(finite)) if finite.size else math.inf
        if sweeps < 0 or worst > KKT_TOL:
            raise ConvergenceError(worst, abs(int(sweeps)))
        return coefs
    return _ridge_path_gram(gram, cy, lambdas)


def _grid_from_corr(corr, n, p, weights, num=DEFAULT_GRID_SIZE):
    corr = np.abs(np.asarray(corr, dtype=float))
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        corr = np.where(w > 0, corr / np.where(w > 0, w, 1.0), 0.0)
    lam_max = float(np.max(corr)) if corr.size else 0.0
    if not lam_max > 0:
        raise DegenerateGridError("lambda_max is zero; response has no signal")
    ratio = 1e-4 if n > p else 1e-2
    return np.geomspace(lam_max, lam_max * ratio, num)


def cross_validate(design, y, spec: PenaltySpec, folds: int = 10, seed=0,
                   lambdas=None, fold_ids=None,
                   intercept_col: bool = True) -> PathFit:
    """K-fold cross-validation over a lambda grid, then a full-data refit.

    The grid defaults to :func:`lambda_grid` computed on the full data; pass
    ``lambdas`` to impose a custom (e.g. refined) grid.  Rows are randomly
    partitioned into near-equal folds using ``seed``; each fold's model is
    standardized on its own training rows and scored on the held-out rows in
    the original scale.  lambda_star is the grid minimizer of the mean
    out-of-fold MSE, with ties resolved to the larger lambda.
    """
    values = _as_values(design)
    y = np.asarray(y, dtype=float)
    n = values.shape[0]
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise ValueError(f"need at least {folds} rows for {folds} folds, got {n}")

    if fold_ids is None:
        fold_ids = _assign_folds(n, folds, seed)
    else:
        fold_ids = np.asarray(fold_ids)
        if fold_ids.shape != (n,):
            raise ValueError("fold_ids must assign one fold per row")
    counts = np.bincount(fold_ids, minlength=folds)
    if counts.min() < 2:
        raise ValueError(f"every fold needs at least 2 rows, got sizes {counts.tolist()}")

    x = values[:, 1:] if intercept_col else values
    p = x.shape[1]
    w = None
    if spec.q == 1 and spec.weights is not None:
        w = np.asarray(spec.weights, dtype=float)
        w = w[1:] if intercept_col else w

    mu_full = x.mean(axis=0)
    ybar_full = float(y.mean())
    xc = x - mu_full
    yc = y - ybar_full
    flag_floor = _CONST_COL_RTOL * np.maximum(np.abs(mu_full), 1.0)
    full = _Moments(xc, yc)
    mu_c, s_inv, ybar_c, gram, cy = _std_from_moments(full, flag_floor)

    if lambdas is None:
        lambdas = _grid_from_corr(cy, n, p, w)
    lambdas = np.asarray(lambdas, dtype=float)
    nlam = len(lambdas)

    fold_mse = np.empty((folds, nlam))
    for f in range(folds):
        te = fold_ids == f
        test = _Moments(xc[te], yc[te])
        train = full.minus(test)
        mu_t, s_inv_t, ybar_t, gram_t, cy_t = _std_from_moments(train, flag_floor)
        coef = _path_from_gram(gram_t, cy_t, lambdas, spec.q, w) * s_inv_t[:, None]
        a = ybar_t - mu_t @ coef
        # held-out sum of squared errors, from the test moments alone
        sse = (test.syy
               - 2.0 * (test.xy @ coef + a * test.sy)
               + np.einsum("kl,kl->l", coef, test.q @ coef)
               + 2.0 * a * (test.s @ coef)
               + a * a * test.n)
        fold_mse[f] = np.maximum(sse, 0.0) / test.n

    cv_mse = fold_mse.mean(axis=0)
    cv_se = fold_mse.std(axis=0, ddof=1) / np.sqrt(folds)
    star = int(np.argmin(cv_mse))  # grid descends: first minimum = largest lambda

    coef_full = _path_from_gram(gram, cy, lambdas, spec.q, w) * s_inv[:, None]
    intercepts_full = (ybar_c - mu_c @ coef_full) + ybar_full - mu_full @ coef_full
    if intercept_col:
        coef_full = np.vstack([np.zeros(nlam), coef_full])
    return PathFit(
        lambdas=lambdas, coefficients=coef_full, intercepts=intercepts_full,
        cv_mse=cv_mse, cv_se=cv_se,
        lambda_star=float(lambdas[star]), lambda_star_index=star,
    )


class OLSMomentScanner:
    """Repeated OLS-on-support fits sharing one pass over the data.

    The eta-threshold stage fits several nested supports on the same rows;
    solving each from precomputed second moments costs O(k^3) instead of a
    fresh O(n k^2) factorization.  Results match :func:`ols_on_support` up
    to float roundoff (an equivalence the test suite pins down).
    """

    def __init__(self, values, y, intercept_col: bool = True):
        values = _as_values(values)
        y = np.asarray(y, dtype=float)
        x = values[:, 1:] if intercept_col else values
        self._offset = 1 if intercept_col else 0
        self._p_total = values.shape[1]
        self.n = y.size
        self.mu_full = x.mean(axis=0)
        self.ybar_full = float(y.mean())
        xc = x - self.mu_full
        yc = y - self.ybar_full
        flag_floor = _CONST_COL_RTOL * np.maximum(np.abs(self.mu_full), 1.0)
        self._mom = _Moments(xc, yc)
        (self._mu_c, self._s_inv, self._ybar_c,
         self._gram, self._cy) = _std_from_moments(self._mom, flag_floor)

    def fit(self, support):
        """(full-length coefficient vector, intercept, rss) for one support."""
        idx = np.asarray([k - self._offset for k in support], dtype=int)
        if np.any(idx < 0):
            raise ValueError("support may not include the constant column")
        coefficients = np.zeros(self._p_total)
        if idx.size:
            if np.any(self._s_inv[idx] == 0.0):
                raise SingularFitError("support includes a constant column")
            g = self._gram[np.ix_(idx, idx)]
            try:
                np.linalg.cholesky(g)
            except np.linalg.LinAlgError:
                raise SingularFitError(
                    f"rank-deficient least squares on support {sorted(support)}"
                ) from None
            b_std = np.linalg.solve(g, self._cy[idx])
            coef = b_std * self._s_inv[idx]
            a_c = self._ybar_c - float(self._mu_c[idx] @ coef)
            mom = self._mom
            rss = (mom.syy
                   - 2.0 * (float(mom.xy[idx] @ coef) + a_c * mom.sy)
                   + float(coef @ (mom.q[np.ix_(idx, idx)] @ coef))
                   + 2.0 * a_c * float(mom.s[idx] @ coef)
                   + a_c * a_c * mom.n)
            intercept = a_c + self.ybar_full - float(self.mu_full[idx] @ coef)
            coefficients[idx + self._offset] = coef
        else:
            a_c = self._ybar_c
            mom = self._mom
            rss = mom.syy - 2.0 * a_c * mom.sy + a_c * a_c * mom.n
            intercept = a_c + self.ybar_full
        return coefficients, float(intercept), float(max(rss, 0.0))


def ols_on_support(design, y, support) -> OLSFit:
    """Least squares with intercept on the selected columns.

    Off-support coefficients are zero in the returned vector.  Raises
    :class:`SingularFitError` when the selected columns (plus intercept) are
    rank deficient.
    """
    values = _as_values(design)
    y = np.asarray(y, dtype=float)
    n, p = values.shape
    support = sorted(int(k) for k in support)
    if len(support) + 1 > n:
        raise ValueError(f"support of size {len(support)} too large for {n} rows")
    cols = values[:, support] if support else np.empty((n, 0))
    a = np.column_stack([np.ones(n), cols])
    # equilibrate columns so rank detection is scale-free
    norms = np.max(np.abs(a), axis=0)
    norms[norms == 0] = 1.0
    sol, _, rank, _ = np.linalg.lstsq(a / norms, y, rcond=None)
    if rank < a.shape[1]:
        raise SingularFitError(
            f"rank-deficient least squares on support {support} (rank {rank})")
    sol = sol / norms
    fitted = a @ sol
    residuals = y - fitted
    rss = float(residuals @ residuals)
    coefficients = np.zeros(p)
    coefficients[support] = sol[1:]
    return OLSFit(coefficients=coefficients, intercept=float(sol[0]),
                  residuals=residuals, rss=rss)
