"""Monomial bases and design matrices for the candidate-function library.

Terms are ordered graded-lexicographically: total degree ascending, and
within a degree by descending exponent tuple, so m=2, d=2 enumerates
1, x1, x2, x1^2, x1*x2, x2^2.  With this ordering the basis of a lower
degree is a prefix of the basis of a higher degree, which makes trimming a
contiguous column slice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MonomialBasis:
    m: int
    degree: int
    terms: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(term_name(e) for e in self.terms)


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    basis: MonomialBasis

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.basis.column_names

    def truncated(self, degree: int) -> "DesignMatrix":
        """Columns up to the given total degree (a prefix slice)."""
        if degree >= self.basis.degree:
            return self
        basis = enumerate_monomials(self.basis.m, degree)
        return DesignMatrix(values=self.values[:, :len(basis)], basis=basis)


def term_name(exponents) -> str:
    """Canonical term identifier, e.g. '1', 'x1', 'x1^2*x3'."""
    parts = []
    for i, e in enumerate(exponents):
        if e == 0:
            continue
        parts.append(f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}")
    return "*".join(parts) if parts else "1"


def enumerate_monomials(m: int, degree: int) -> MonomialBasis:
    """All exponent vectors with total degree <= degree, graded-lex ordered."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    terms = []
    for d in range(degree + 1):
        # combinations_with_replacement of variable indices yields, per degree,
        # the exponent vectors in descending lexicographic order
        for combo in itertools.combinations_with_replacement(range(m), d):
            e = [0] * m
            for idx in combo:
                e[idx] += 1
            terms.append(tuple(e))
    assert len(terms) == math.comb(m + degree, degree)
    return MonomialBasis(m=m, degree=degree, terms=tuple(terms))


def build_design(states: np.ndarray, basis: MonomialBasis) -> DesignMatrix:
    """Evaluate every basis monomial on every row of ``states``."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != basis.m:
        raise ValueError(
            f"states must be n x {basis.m}, got array of shape {states.shape}"
        )
    if not np.all(np.isfinite(states)):
        raise ValueError("states must be finite")
    n = states.shape[0]
    values = np.empty((n, len(basis)))
    for k, exps in enumerate(basis.terms):
        # left-to-right repeated multiplication: bit-identical to the naive
        # scalar product regardless of pow() implementation details
        col = np.ones(n)
        for j, e in enumerate(exps):
            for _ in range(e):
                col = col * states[:, j]
        values[:, k] = col
    if not np.all(np.isfinite(values)):
        bad_col = int(np.argmax(~np.isfinite(values).all(axis=0)))
        bad_row = int(np.argmax(~np.isfinite(values[:, bad_col])))
        raise ValueError(
            f"design overflow at row {bad_row}, column "
            f"{term_name(basis.terms[bad_col])!r}"
        )
    return DesignMatrix(values=values, basis=basis)


def trim_degree(estimate: np.ndarray, basis: MonomialBasis) -> int:
    """Highest total degree among nonzero coefficients, floored at 1."""
    estimate = np.asarray(estimate)
    if estimate.shape != (len(basis),):
        raise ValueError(
            f"estimate must have length {len(basis)}, got {estimate.shape}"
        )
    degrees = [sum(e) for e in basis.terms]
    best = 0
    for k in np.flatnonzero(estimate):
        best = max(best, degrees[k])
    return max(best, 1)
