from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from canonical_heights import exact

small = st.integers(-6, 6)
mat3 = st.lists(st.lists(small, min_size=3, max_size=3), min_size=3, max_size=3)


def test_parse_and_format_roundtrip():
    assert exact.parse_rational("3/6") == Fraction(1, 2)
    assert exact.parse_rational(4) == Fraction(4)
    assert exact.format_rational(Fraction(-2, 4)) == "-1/2"
    assert exact.format_rational(Fraction(5)) == "5"


def test_parse_rejects_floats_text():
    with pytest.raises((ValueError, TypeError)):
        exact.parse_rational("abc")


@given(mat3)
@settings(max_examples=60, deadline=None)
def test_det_matches_sympy(rows):
    assert exact.det(exact.to_fraction_matrix(rows)) == sympy.Matrix(rows).det()


@given(mat3)
@settings(max_examples=40, deadline=None)
def test_charpoly_matches_sympy(rows):
    t = sympy.symbols("t")
    ref = sympy.Poly(sympy.Matrix(rows).charpoly(t).as_expr(), t).all_coeffs()
    assert exact.charpoly(exact.to_fraction_matrix(rows)) == [Fraction(int(c)) for c in ref]


@given(mat3)
@settings(max_examples=40, deadline=None)
def test_inverse(rows):
    m = exact.to_fraction_matrix(rows)
    if exact.det(m) == 0:
        return
    assert exact.matmul(m, exact.inverse(m)) == exact.identity(3)


def test_matpow_negative():
    a = exact.to_fraction_matrix([[2, 1], [1, 1]])
    assert exact.matmul(exact.matpow(a, 3), exact.matpow(a, -3)) == exact.identity(2)


def test_squarefree_part():
    # (t - 1)^2 (t + 2) -> (t - 1)(t + 2) = t^2 + t - 2
    p = [Fraction(c) for c in (1, 0, -3, 2)]
    assert exact.squarefree_part(p) == [1, 1, -2]


def test_float_view():
    a = exact.to_fraction_matrix([[1, 2], [3, 4]])
    assert np.array_equal(exact.as_float_array(a), np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert exact.is_integer_matrix(a)
    assert not exact.is_integer_matrix([[Fraction(1, 2)]])
