"""Small exact-rational linear algebra kit.

Matrices are nested lists/tuples of ``Fraction`` (or ``int``).  Only what the
other modules need lives here: parsing and printing of ``"p/q"`` strings,
products, Bareiss determinants, Gauss-Jordan inverses and characteristic
polynomials.
"""

from fractions import Fraction
from numbers import Integral, Rational

import numpy as np


def parse_rational(value):
    """Parse ``"p/q"``, ``"p"``, ints and Fractions to ``Fraction``.

    Floats are returned unchanged; callers that require exactness check
    with :func:`is_exact_scalar`.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return value
    raise TypeError(f"cannot parse {value!r} as a rational")


def format_rational(value):
    """``Fraction`` -> ``"p/q"`` (or ``"p"`` for integers)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def is_exact_scalar(value):
    return isinstance(value, Rational) and not isinstance(value, bool)


def is_exact_matrix(rows):
    return all(is_exact_scalar(x) for row in rows for x in row)


def to_fraction_matrix(rows):
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def parse_matrix(rows):
    """JSON rows (strings / ints / floats) -> exact tuple matrix or float array."""
    parsed = [[parse_rational(x) for x in row] for row in rows]
    if is_exact_matrix(parsed):
        return to_fraction_matrix(parsed)
    return np.array([[float(x) for x in row] for row in parsed])


def format_matrix(rows):
    if isinstance(rows, np.ndarray):
        return [[float(x) for x in row] for row in rows]
    return [[format_rational(x) for x in row] for row in rows]


def identity(n):
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def matmul(a, b):
    bt = list(zip(*b))
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt)
                 for row in a)


def transpose(a):
    return tuple(tuple(col) for col in zip(*a))


def matpow(a, e):
    """Integer power; negative exponents use the exact inverse."""
    if e < 0:
        a, e = inverse(a), -e
    result = identity(len(a))
    base = a
    while e:
        if e & 1:
            result = matmul(result, base)
        base = matmul(base, base)
        e >>= 1
    return result


def det(a):
    """Bareiss fraction-free elimination; exact for rational input."""
    m = [list(map(Fraction, row)) for row in a]
    n = len(m)
    if n == 0:
        return Fraction(1)
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def inverse(a):
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("matrix is singular")
        m[col], m[pivot] = m[pivot], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return tuple(tuple(row[n:]) for row in m)


def charpoly(a):
    """Monic characteristic polynomial det(tI - A), highest degree first.

    Faddeev-LeVerrier recursion; every division is by an integer so the
    result is exact over Q.
    """
    n = len(a)
    coeffs = [Fraction(1)]
    mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{k-1} I
        for i in range(n):
            mk[i][i] += coeffs[-1]
        am = matmul(a, mk)
        ck = -sum((am[i][i] for i in range(n)), Fraction(0)) / k
        coeffs.append(ck)
        mk = [list(row) for row in am]
    return coeffs


def as_float_array(a):
    return np.array([[float(x) for x in row] for row in a], dtype=float)


def is_integer_matrix(a):
    return all(isinstance(x, Integral) or (is_exact_scalar(x) and Fraction(x).denominator == 1)
               for row in a for x in row)


def poly_gcd(p, q):
    """Monic gcd of two polynomials over Q (coefficients highest first)."""
    p = _strip([Fraction(c) for c in p])
    q = _strip([Fraction(c) for c in q])
    while q and any(q):
        p, q = q, _poly_rem(p, q)
        q = _strip(q)
    if not p:
        return [Fraction(0)]
    lead = p[0]
    return [c / lead for c in p]


def poly_quotient(p, q):
    p = [Fraction(c) for c in p]
    q = _strip([Fraction(c) for c in q])
    out = []
    rem = list(p)
    while len(rem) >= len(q):
        f = rem[0] / q[0]
        out.append(f)
        for i in range(len(q)):
            rem[i] -= f * q[i]
        rem.pop(0)
    return out or [Fraction(0)]


def poly_derivative(p):
    d = len(p) - 1
    return [c * (d - i) for i, c in enumerate(p[:-1])]


def squarefree_part(p):
    g = poly_gcd(p, poly_derivative(p))
    if len(g) <= 1:
        return [Fraction(c) for c in p]
    return poly_quotient(p, g)


def _strip(p):
    i = 0
    while i < len(p) and p[i] == 0:
        i += 1
    return p[i:]


def _poly_rem(p, q):
    rem = list(p)
    while len(rem) >= len(q) and rem:
        f = rem[0] / q[0]
        for i in range(len(q)):
            rem[i] -= f * q[i]
        rem.pop(0)
        rem = _strip(rem)
    return rem
