import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from argos.design import (
    DesignMatrix,
    build_design,
    enumerate_monomials,
    term_name,
    trim_degree,
)


def test_enumerate_m2_d2_order_and_names():
    basis = enumerate_monomials(2, 2)
    assert basis.terms == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    assert basis.column_names == ("1", "x1", "x2", "x1^2", "x1*x2", "x2^2")


def test_enumerate_counts():
    assert len(enumerate_monomials(3, 5)) == 56
    assert len(enumerate_monomials(2, 5)) == 21
    assert len(enumerate_monomials(2, 2)) == 6


@given(m=st.integers(1, 4), d=st.integers(1, 6))
@settings(max_examples=24, deadline=None)
def test_enumerate_count_formula_and_uniqueness(m, d):
    basis = enumerate_monomials(m, d)
    assert len(basis) == math.comb(m + d, d)
    assert len(set(basis.terms)) == len(basis)
    assert basis.terms[0] == (0,) * m


@given(m=st.integers(1, 4), d=st.integers(2, 6), data=st.data())
@settings(max_examples=24, deadline=None)
def test_lower_degree_basis_is_prefix(m, d, data):
    d1 = data.draw(st.integers(1, d - 1))
    full = enumerate_monomials(m, d)
    small = enumerate_monomials(m, d1)
    assert full.terms[:len(small)] == small.terms


def test_term_name_formats():
    assert term_name((0, 0, 0)) == "1"
    assert term_name((1, 0, 0)) == "x1"
    assert term_name((2, 0, 1)) == "x1^2*x3"
    assert term_name((1, 3)) == "x1*x2^3"


def test_build_design_single_row():
    basis = enumerate_monomials(2, 2)
    dm = build_design(np.array([[2.0, 3.0]]), basis)
    np.testing.assert_array_equal(dm.values[0], [1, 2, 3, 4, 6, 9])


def test_build_design_zero_states():
    basis = enumerate_monomials(3, 3)
    dm = build_design(np.zeros((4, 3)), basis)
    assert np.all(dm.values[:, 0] == 1.0)
    assert np.all(dm.values[:, 1:] == 0.0)


def test_build_design_matches_bruteforce_oracle():
    rng = np.random.default_rng(1)
    states = rng.normal(size=(50, 3))
    basis = enumerate_monomials(3, 5)
    dm = build_design(states, basis)
    for i in range(50):
        for k, exps in enumerate(basis.terms):
            expect = 1.0
            for j, e in enumerate(exps):
                for _ in range(e):
                    expect *= float(states[i, j])
            assert dm.values[i, k] == expect


def test_build_design_overflow_names_column():
    # 1e200 overflows first at the x1^2 column
    basis = enumerate_monomials(2, 5)
    with np.errstate(over="ignore"):
        with pytest.raises(ValueError, match="row 0.*x1\\^2"):
            build_design(np.array([[1e200, 1.0]]), basis)


def test_build_design_validates_shape():
    basis = enumerate_monomials(2, 2)
    with pytest.raises(ValueError):
        build_design(np.zeros((4, 3)), basis)


def test_scaling_property_powers_of_two():
    # scaling states by 2^j scales column k by exactly 2^(j*deg(k))
    rng = np.random.default_rng(2)
    states = rng.normal(size=(20, 2))
    basis = enumerate_monomials(2, 4)
    base = build_design(states, basis).values
    scaled = build_design(4.0 * states, basis).values
    for k, exps in enumerate(basis.terms):
        np.testing.assert_array_equal(scaled[:, k], base[:, k] * 4.0 ** sum(exps))


def test_trim_degree_examples():
    basis = enumerate_monomials(2, 5)
    names = list(basis.column_names)

    est = np.zeros(len(basis))
    est[names.index("x2")] = 1.0
    est[names.index("x1*x2")] = -0.5
    assert trim_degree(est, basis) == 2

    assert trim_degree(np.zeros(len(basis)), basis) == 1

    est = np.zeros(len(basis))
    est[names.index("x1^3*x2^2")] = 0.1
    assert trim_degree(est, basis) == 5


def test_trim_degree_constant_only_floors_to_one():
    basis = enumerate_monomials(2, 3)
    est = np.zeros(len(basis))
    est[0] = 2.0
    assert trim_degree(est, basis) == 1


def test_truncated_design_is_column_prefix():
    rng = np.random.default_rng(3)
    states = rng.normal(size=(10, 3))
    dm = build_design(states, enumerate_monomials(3, 5))
    cut = dm.truncated(2)
    assert cut.basis.degree == 2
    assert cut.values.shape[1] == 10
    np.testing.assert_array_equal(cut.values, dm.values[:, :10])
    assert dm.truncated(7) is dm
