"""Exact elliptic-curve arithmetic over Q and Neron-Tate heights.

Convention: hhat(P) = lim 4^-m h(x(2^m P)) with h the logarithmic height of
the x-coordinate and no extra factor 1/2.  The pairing is the polarization
<P, Q> = (hhat(P + Q) - hhat(P) - hhat(Q)) / 2, so <P, P> = hhat(P).
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np

from .errors import DigitBudgetExceeded, InfinityPoint

DIGIT_BUDGET = 10**6
TORSION_ORDERS = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12)
SAFETY = 2.0
LOG2 = math.log(2.0)


def _q(v):
    if isinstance(v, str):
        return Fraction(v.strip())
    return Fraction(v)


@dataclass(frozen=True)
class CurveQ:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 over Q."""

    a1: Fraction = Fraction(0)
    a2: Fraction = Fraction(0)
    a3: Fraction = Fraction(0)
    a4: Fraction = Fraction(0)
    a6: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a6"):
            object.__setattr__(self, name, _q(getattr(self, name)))
        if self.discriminant == 0:
            raise ValueError("singular curve")

    @property
    def b2(self):
        return self.a1 ** 2 + 4 * self.a2

    @property
    def b4(self):
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self):
        return self.a3 ** 2 + 4 * self.a6

    @property
    def b8(self):
        a1, a2, a3, a4, a6 = self.a1, self.a2, self.a3, self.a4, self.a6
        return a1 ** 2 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 ** 2 - a4 ** 2

    @property
    def discriminant(self):
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2 ** 2 * b8 - 8 * b4 ** 3 - 27 * b6 ** 2 + 9 * b2 * b4 * b6

    @property
    def j_invariant(self):
        c4 = self.b2 ** 2 - 24 * self.b4
        return c4 ** 3 / self.discriminant

    def contains(self, p):
        if p.is_infinity:
            return True
        x, y = p.x, p.y
        return y * y + self.a1 * x * y + self.a3 * y == x ** 3 + self.a2 * x * x + self.a4 * x + self.a6

    def point(self, x, y):
        p = PointQ(_q(x), _q(y))
        if not self.contains(p):
            raise ValueError(f"({x}, {y}) is not on the curve")
        return p

    def to_json(self):
        return {k: str(getattr(self, k)) for k in ("a1", "a2", "a3", "a4", "a6")}

    @classmethod
    def from_json(cls, obj):
        return cls(*(obj.get(k, "0") for k in ("a1", "a2", "a3", "a4", "a6")))


@dataclass(frozen=True)
class PointQ:
    x: Fraction = None
    y: Fraction = None

    @property
    def is_infinity(self):
        return self.x is None

    def to_json(self):
        return None if self.is_infinity else [str(self.x), str(self.y)]


O = PointQ()


def point_from_json(obj):
    if obj is None or obj == "O":
        return O
    return PointQ(_q(obj[0]), _q(obj[1]))


def neg(e, p):
    if p.is_infinity:
        return p
    return PointQ(p.x, -p.y - e.a1 * p.x - e.a3)


def add(e, p, q):
    """Chord-tangent addition."""
    if p.is_infinity:
        return q
    if q.is_infinity:
        return p
    if p.x == q.x:
        if p.y + q.y + e.a1 * q.x + e.a3 == 0:
            return O
        lam = (3 * p.x ** 2 + 2 * e.a2 * p.x + e.a4 - e.a1 * p.y) / (2 * p.y + e.a1 * p.x + e.a3)
    else:
        lam = (q.y - p.y) / (q.x - p.x)
    nu = p.y - lam * p.x
    x3 = lam * lam + e.a1 * lam - e.a2 - p.x - q.x
    y3 = -(lam + e.a1) * x3 - nu - e.a3
    return PointQ(x3, y3)


def double(e, p):
    return add(e, p, p)


def sub(e, p, q):
    return add(e, p, neg(e, q))


def mul(e, n, p):
    if n < 0:
        return mul(e, -n, neg(e, p))
    result, base = O, p
    while n:
        if n & 1:
            result = add(e, result, base)
        base = double(e, base)
        n >>= 1
    return result


def naive_height(p):
    """log max(|num|, |den|) of x(P)."""
    if p.is_infinity:
        raise InfinityPoint("the point at infinity has no x-coordinate")
    return math.log(max(abs(p.x.numerator), p.x.denominator))


def torsion_order(e, p):
    """Smallest n <= 12 with nP = O, else None."""
    q = p
    for n in range(1, 13):
        if q.is_infinity:
            return n
        q = add(e, q, p)
    return None


def is_torsion(e, p):
    """nP = O for some n in {1..10, 12} (the possible orders over Q)."""
    return torsion_order(e, p) in TORSION_ORDERS


def _log_abs(z):
    z = abs(z)
    if z == 0:
        return float("-inf")
    bits = int(gmpy2.bit_length(z))
    if bits <= 1000:
        return math.log(int(z))
    shift = bits - 64
    return math.log(int(z >> shift)) + shift * LOG2


def _digits(z):
    return int(gmpy2.bit_length(abs(z)) * 0.30103) + 1


@dataclass(frozen=True)
class HeightEstimate:
    value: float
    tail: float
    iters: int
    truncated: bool = False
    torsion: bool = False
    heights: tuple = ()

    @property
    def finite(self):
        return math.isfinite(self.tail)


def _doubling_coefficients(e):
    b2, b4, b6, b8 = e.b2, e.b4, e.b6, e.b8
    den = 1
    for c in (b2, b4, b6, b8):
        den = den * c.denominator // math.gcd(den, c.denominator)
    return [gmpy2.mpz(int(c * den)) for c in (b2, b4, b6, b8)]


def doubling_heights(e, p, iters, digit_budget=DIGIT_BUDGET):
    """h(x(2^k P)) for k = 0..iters via integer x-only doubling.

    Returns (heights, reached_infinity, truncated).
    """
    if p.is_infinity:
        return [], True, False
    b2, b4, b6, b8 = _doubling_coefficients(e)
    X, Z = gmpy2.mpz(p.x.numerator), gmpy2.mpz(p.x.denominator)
    hs = [naive_height(p)]
    for _ in range(iters):
        X2, Z2 = X * X, Z * Z
        XZ = X * Z
        Z3 = Z2 * Z
        nx = X2 * X2 - b4 * X2 * Z2 - 2 * b6 * X * Z3 - b8 * Z2 * Z2
        nz = 4 * X2 * XZ + b2 * X2 * Z2 + 2 * b4 * XZ * Z2 + b6 * Z2 * Z2
        if nz == 0:
            return hs, True, False
        g = gmpy2.gcd(nx, nz)
        X, Z = nx // g, nz // g
        if Z < 0:
            X, Z = -X, -Z
        if max(_digits(X), _digits(Z)) > digit_budget:
            return hs, False, True
        hs.append(max(_log_abs(X), _log_abs(Z)))
    return hs, False, False


def neron_tate(e, p, iters=8, digit_budget=DIGIT_BUDGET, strict=False):
    """Estimate hhat(P) = 4^-m h(x(2^m P)) with an empirical tail bound.

    The tail is SAFETY * max_k |h_{k+1} - 4 h_k| * 4^-m over the computed
    doublings.  When the digit budget stops the orbit early the value at the
    last affordable depth is returned with an infinite tail (or
    ``DigitBudgetExceeded`` with ``strict=True``).
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if p.is_infinity or is_torsion(e, p):
        return HeightEstimate(0.0, 0.0, 0, torsion=True)
    hs, hit_o, truncated = doubling_heights(e, p, iters, digit_budget)
    if hit_o:
        # 2^k P = O: P is torsion
        return HeightEstimate(0.0, 0.0, len(hs) - 1, torsion=True, heights=tuple(hs))
    if truncated and strict:
        raise DigitBudgetExceeded(f"x(2^{len(hs)} P) exceeds {digit_budget} digits")
    m = len(hs) - 1
    value = hs[-1] / 4.0 ** m
    defects = [abs(hs[k + 1] - 4 * hs[k]) for k in range(m)]
    c = max(defects) if defects else 0.0
    tail = float("inf") if truncated or m == 0 else SAFETY * c / 4.0 ** m
    return HeightEstimate(value, tail, m, truncated=truncated, heights=tuple(hs))


@dataclass(frozen=True, eq=False)
class PairingGram:
    G: np.ndarray
    tail: np.ndarray

    @property
    def max_tail(self):
        return float(self.tail.max()) if self.tail.size else 0.0

    def to_json(self):
        return {"G": self.G.tolist(), "tail": self.tail.tolist()}


def pairing_gram(e, points, iters=8, digit_budget=DIGIT_BUDGET, cache=None):
    """Gram matrix of the Neron-Tate pairing with per-entry tails."""
    cache = {} if cache is None else cache

    def hh(p):
        key = (p.x, p.y)
        if key not in cache:
            cache[key] = neron_tate(e, p, iters, digit_budget)
        return cache[key]

    n = len(points)
    G = np.zeros((n, n))
    T = np.zeros((n, n))
    diag = [hh(p) for p in points]
    for a in range(n):
        G[a, a] = diag[a].value
        T[a, a] = diag[a].tail
        for b in range(a + 1, n):
            s = hh(add(e, points[a], points[b]))
            G[a, b] = G[b, a] = (s.value - diag[a].value - diag[b].value) / 2
            T[a, b] = T[b, a] = (s.tail + diag[a].tail + diag[b].tail) / 2
    return PairingGram(G, T)


def act(e, a, points):
    """Integer matrix acting on E^n: (A P)_i = sum_j A[i][j] P_j."""
    out = []
    for row in a:
        acc = O
        for c, p in zip(row, points):
            c = int(c)
            if c:
                acc = add(e, acc, mul(e, c, p))
        out.append(acc)
    return out


def integral_points(e, xbound):
    """Points with integer x in [-xbound, xbound] (small search helper)."""
    out = []
    for x in range(-xbound, xbound + 1):
        x = Fraction(x)
        # y^2 + (a1 x + a3) y - rhs = 0
        b = e.a1 * x + e.a3
        c = -(x ** 3 + e.a2 * x * x + e.a4 * x + e.a6)
        disc = b * b - 4 * c
        if disc < 0:
            continue
        num, den = disc.numerator, disc.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn != num or rd * rd != den:
            continue
        r = Fraction(rn, rd)
        for y in sorted({(-b + r) / 2, (-b - r) / 2}):
            out.append(PointQ(x, y))
    return out
