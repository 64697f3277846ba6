import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from canonical_heights.errors import DimensionMismatch, EntropyCheckFailed, NotCommuting
from canonical_heights.ns_abelian import (AutoAction, dynamical_degree_profile, eigendivisor_system,
                                          intersection_number, is_weakly_numerically_trivial, mixed_discriminant,
                                          mixed_discriminant_polarization, pullback)

C = [[0, 0, 1], [1, 0, 3], [0, 1, 0]]
CI = [[1, 0, 1], [1, 1, 3], [0, 1, 1]]

def _mu(k):
    return 2 * math.cos(math.radians(20 + 120 * k))


frac = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def sym(n):
    return st.lists(frac, min_size=n * (n + 1) // 2, max_size=n * (n + 1) // 2).map(lambda v: _fill(v, n))


def _fill(v, n):
    m = [[Fraction(0)] * n for _ in range(n)]
    it = iter(v)
    for a in range(n):
        for b in range(a, n):
            m[a][b] = m[b][a] = next(it)
    return m


def _oracle(mats):
    n = len(mats)
    ts = sympy.symbols(f"t1:{n + 1}")
    m = sympy.zeros(n, n)
    for t, a in zip(ts, mats):
        m += t * sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in a])
    return sympy.Poly(sympy.expand(m.det()), *ts).coeff_monomial(sympy.prod(ts)) / math.factorial(n)


@given(st.lists(sym(2), min_size=2, max_size=2))
@settings(max_examples=30, deadline=None)
def test_two_by_two_against_symbolic(mats):
    d = mixed_discriminant(*mats)
    assert d == mixed_discriminant_polarization(*mats)
    r = _oracle(mats)
    assert sympy.Rational(d.numerator, d.denominator) == r


def test_basic_values():
    eye = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert mixed_discriminant(eye, eye, eye) == 1
    diag = [[1, 0, 0], [0, 2, 0], [0, 0, 3]]
    assert mixed_discriminant(diag, diag, diag) == 6
    assert intersection_number(eye, eye, eye) == 6


def test_rank_one_triple():
    u = [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
    v = [[0, 0, 0], [0, 1, 0], [0, 0, 0]]
    w = [[0, 0, 0], [0, 0, 0], [0, 0, 1]]
    assert mixed_discriminant(u, v, w) == Fraction(1, 6)
    assert mixed_discriminant_polarization(u, v, w) == Fraction(1, 6)


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        mixed_discriminant([[1, 0], [0, 1]], [[1]])
    with pytest.raises(DimensionMismatch):
        mixed_discriminant([[1, 0], [0, 1]])


@given(sym(3), sym(3), sym(3))
@settings(max_examples=20, deadline=None)
def test_pullback_scales_by_det_squared(a, b, c):
    g = [[2, 1, 0], [1, 1, 0], [0, 0, 1]]      # det 1
    assert intersection_number(*(pullback(g, m) for m in (a, b, c))) == intersection_number(a, b, c)
    g2 = [[2, 0, 0], [0, 1, 0], [0, 0, 1]]     # det 2
    assert intersection_number(*(pullback(g2, m) for m in (a, b, c))) == 4 * intersection_number(a, b, c)


def test_multilinear_symmetric():
    rng = np.random.default_rng(3)
    mats = [_fill([Fraction(int(x)) for x in rng.integers(-4, 5, 6)], 3) for _ in range(4)]
    a, b, c, d = mats
    s = [[a[i][j] + d[i][j] for j in range(3)] for i in range(3)]
    assert mixed_discriminant(s, b, c) == mixed_discriminant(a, b, c) + mixed_discriminant(d, b, c)
    assert mixed_discriminant(a, b, c) == mixed_discriminant(c, a, b)


def test_weak_triviality():
    u = [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
    assert is_weakly_numerically_trivial([u, u])          # square of a rank-one class
    assert not is_weakly_numerically_trivial([u])
    v = [[0, 0, 0], [0, 1, 0], [0, 0, 0]]
    assert not is_weakly_numerically_trivial([u, v])


def test_eigendivisor_squares_are_weakly_trivial():
    eds = eigendivisor_system([C, CI])
    for d in eds.classes:
        assert is_weakly_numerically_trivial([d, d], tol=1e-12)
    assert not is_weakly_numerically_trivial([eds.classes[0], eds.classes[1]], tol=1e-12)


def test_eigendivisor_certificates():
    eds = eigendivisor_system([C, CI])
    c = eds.certificates
    assert c["count"] == 3 and c["distinct"] and c["D_positive_definite"]
    assert c["intersection"] == pytest.approx(c["det_V_squared"], abs=1e-12)
    assert c["intersection"] == pytest.approx(9 / 19, abs=1e-9)
    a = np.array(C, dtype=float)
    for v, chi in zip(eds.eigenvectors, eds.characters.values):
        mu = math.sqrt(chi[0])
        assert np.allclose(np.abs(a.T @ v), mu * np.abs(v), atol=1e-9)


def test_entropy_and_commutation_checks():
    with pytest.raises(NotCommuting):
        eigendivisor_system([C, [[1, 1, 0], [0, 1, 0], [0, 0, 1]]])
    with pytest.raises(EntropyCheckFailed):
        eigendivisor_system([[[0, 1], [1, 0]]])


def test_auto_action_validation():
    with pytest.raises(ValueError):
        AutoAction([[2, 0], [0, 1]])
    with pytest.raises(ValueError):
        AutoAction([[Fraction(1, 2), 0], [0, 2]])


def test_dynamical_degree_routes_agree():
    prof = dynamical_degree_profile(C, m_max=16)
    want = [1.0, _mu(0) ** 2, (_mu(0) * _mu(1)) ** 2, 1.0]
    assert np.allclose(prof["spectral"], want, rtol=1e-12)
    assert np.allclose(prof["limit"], want, rtol=1e-9)
