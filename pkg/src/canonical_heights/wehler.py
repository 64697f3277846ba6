"""Wehler K3 surfaces in P^2 x P^2 over Q.

A surface is the intersection of a (1,1) form ``L(x, y) = x^T L y`` and a
(2,2) form ``Q(x, y) = sum c[alpha][beta] x^alpha y^beta`` (alpha, beta
running over the six quadratic monomials).  Points are pairs of primitive
integer vectors whose first nonzero coordinate is positive.

``sigma(S, p, 1)`` keeps x and swaps the two points of the fiber over x;
``sigma(S, p, 2)`` keeps y.  The dynamics is phi = sigma_2 o sigma_1.
"""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import gmpy2
import numpy as np

from . import exact
from .errors import BudgetExceeded, IndeterminateFiber

MONOMIALS = ((2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2))
GRAM = ((2, 4), (4, 2))
SIGMA1_STAR = ((1, 4), (0, -1))     # columns are the images of D1, D2
SIGMA2_STAR = ((-1, 0), (4, 1))
DIGIT_BUDGET = 10**6
ENUMERATION_CAP = 10**6
LAMBDA1 = 7 + 4 * math.sqrt(3)


def _mono_key(alpha, beta):
    return "".join(map(str, alpha)) + ";" + "".join(map(str, beta))


def _parse_key(key):
    a, b = key.split(";")
    alpha, beta = tuple(int(c) for c in a), tuple(int(c) for c in b)
    if alpha not in MONOMIALS or beta not in MONOMIALS:
        raise ValueError(f"bad monomial key {key!r}")
    return MONOMIALS.index(alpha), MONOMIALS.index(beta)


def _mono(v, alpha):
    out = 1
    for vi, ai in zip(v, alpha):
        if ai:
            out *= vi ** ai
    return out


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def normalize(v):
    """Primitive integer representative with first nonzero coordinate positive."""
    if any(isinstance(c, Fraction) and c.denominator != 1 for c in v):
        return _rational_normalize(v)
    v = [gmpy2.mpz(c) for c in v]
    g = gmpy2.gcd(gmpy2.gcd(v[0], v[1]), v[2])
    if g == 0:
        raise ValueError("zero vector is not a projective point")
    v = [c // g for c in v]
    for c in v:
        if c:
            if c < 0:
                v = [-d for d in v]
            break
    return tuple(v)


def _frac(c):
    return Fraction(int(c)) if isinstance(c, type(gmpy2.mpz(0))) else Fraction(c)


def _rational_normalize(v):
    v = [_frac(c) for c in v]
    den = 1
    for c in v:
        den = den * c.denominator // math.gcd(den, c.denominator)
    return normalize([int(c * den) for c in v])


@dataclass(frozen=True, eq=False)
class SurfacePoint:
    x: tuple
    y: tuple

    @classmethod
    def of(cls, x, y):
        return cls(_rational_normalize(x), _rational_normalize(y))

    def __eq__(self, other):
        return isinstance(other, SurfacePoint) and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((tuple(int(c) for c in self.x), tuple(int(c) for c in self.y)))

    def digits(self):
        return max(int(gmpy2.bit_length(abs(c)) * 0.30103) + 1 for c in self.x + self.y)

    def to_json(self):
        return {"x": [str(int(c)) for c in self.x], "y": [str(int(c)) for c in self.y]}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (list, tuple)):
            return cls.of(obj[0], obj[1])
        return cls.of([int(c) for c in obj["x"]], [int(c) for c in obj["y"]])

    def __repr__(self):
        if self.digits() > 40:
            return f"SurfacePoint(<{self.digits()} digits>)"
        return f"SurfacePoint(x={[int(c) for c in self.x]}, y={[int(c) for c in self.y]})"


@dataclass(frozen=True, eq=False)
class WehlerSurface:
    L: tuple                   # 3x3 integers
    Q: tuple                   # 6x6 integers: Q[i][j] multiplies x^MON[i] y^MON[j]
    name: str = "wehler"
    base_points: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(tuple(gmpy2.mpz(c) for c in row) for row in self.L))
        object.__setattr__(self, "Q", tuple(tuple(gmpy2.mpz(c) for c in row) for row in self.Q))

    # -- forms --------------------------------------------------------------

    def L_value(self, x, y):
        return sum(self.L[a][b] * x[a] * y[b] for a in range(3) for b in range(3))

    def line_in_y(self, x):
        """Coefficients of the line L(x, .) in the y-plane: L^T x."""
        return tuple(sum(self.L[a][b] * x[a] for a in range(3)) for b in range(3))

    def line_in_x(self, y):
        return tuple(sum(self.L[a][b] * y[b] for b in range(3)) for a in range(3))

    def conic_in_y(self, x):
        """Coefficients over the y-monomials of Q(x, .)."""
        xm = [_mono(x, al) for al in MONOMIALS]
        return tuple(sum(self.Q[i][j] * xm[i] for i in range(6)) for j in range(6))

    def conic_in_x(self, y):
        ym = [_mono(y, be) for be in MONOMIALS]
        return tuple(sum(self.Q[i][j] * ym[j] for j in range(6)) for i in range(6))

    def Q_value(self, x, y):
        cy = self.conic_in_y(x)
        return sum(c * _mono(y, be) for c, be in zip(cy, MONOMIALS))

    def to_json(self):
        qmap = {}
        for i, al in enumerate(MONOMIALS):
            for j, be in enumerate(MONOMIALS):
                if self.Q[i][j]:
                    qmap[_mono_key(al, be)] = str(int(self.Q[i][j]))
        out = {"kind": "wehler", "name": self.name,
               "L": [[str(int(c)) for c in row] for row in self.L], "Q": qmap,
               "base_points": [p.to_json() for p in self.base_points]}
        out.update(self.meta)
        return out

    @classmethod
    def from_json(cls, obj):
        lrows = exact.parse_matrix(obj["L"])
        q = [[Fraction(0)] * 6 for _ in range(6)]
        for key, val in obj["Q"].items():
            i, j = _parse_key(key)
            q[i][j] = exact.parse_rational(val)
        # clear denominators separately for the two forms
        lden = _lcm_den([c for row in lrows for c in row])
        qden = _lcm_den([c for row in q for c in row])
        L = [[int(Fraction(c) * lden) for c in row] for row in lrows]
        Q = [[int(Fraction(c) * qden) for c in row] for row in q]
        pts = tuple(SurfacePoint.from_json(p) for p in obj.get("base_points", []))
        meta = {k: v for k, v in obj.items() if k not in ("kind", "name", "L", "Q", "base_points")}
        return cls(L, Q, obj.get("name", "wehler"), pts, meta)


def _lcm_den(vals):
    den = 1
    for c in vals:
        c = _frac(c)
        den = den * c.denominator // math.gcd(den, c.denominator)
    return den


# ---------------------------------------------------------------------------
# membership, smoothness


def contains(S, p):
    """Exact membership; input is normalized first."""
    p = p if isinstance(p, SurfacePoint) else SurfacePoint.of(*p)
    p = SurfacePoint.of(p.x, p.y)
    return S.L_value(p.x, p.y) == 0 and S.Q_value(p.x, p.y) == 0


def gradients(S, p):
    """(grad L, grad Q) with respect to (x0, x1, x2, y0, y1, y2)."""
    x, y = p.x, p.y
    gl = list(S.line_in_x(y)) + list(S.line_in_y(x))
    cy = S.conic_in_y(x)
    cx = S.conic_in_x(y)
    gq = []
    for var, coeffs, v in ((0, cx, x), (1, cy, y)):
        for k in range(3):
            tot = 0
            for c, al in zip(coeffs, MONOMIALS):
                if al[k] and c:
                    d = list(al)
                    d[k] -= 1
                    tot += c * al[k] * _mono(v, d)
            gq.append(tot)
    return gl, gq


def is_smooth_at(S, p):
    gl, gq = gradients(S, p)
    return any(gl[i] * gq[j] - gl[j] * gq[i] for i in range(6) for j in range(i + 1, 6))


# ---------------------------------------------------------------------------
# involutions


def _line_basis(ell):
    """Two integer points spanning the line ell . v = 0."""
    e = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    cands = [_cross(ell, ei) for ei in e]
    for i in range(3):
        for j in range(i + 1, 3):
            n = _cross(cands[i], cands[j])
            if any(n):
                return cands[i], cands[j], n
    raise IndeterminateFiber("degenerate line")


def _eval_conic(coeffs, v):
    return sum(c * _mono(v, m) for c, m in zip(coeffs, MONOMIALS))


def _binary_quadratic(coeffs, u, w):
    a = _eval_conic(coeffs, u)
    c = _eval_conic(coeffs, w)
    b = _eval_conic(coeffs, tuple(ui + wi for ui, wi in zip(u, w))) - a - c
    return a, b, c


def _swap(ell, conic, known):
    """Other intersection point of the line ``ell`` with the conic through ``known``."""
    if not any(ell):
        raise IndeterminateFiber("the fiber is a whole conic")
    u, w, n = _line_basis(ell)
    a, b, c = _binary_quadratic(conic, u, w)
    if a == 0 and b == 0 and c == 0:
        raise IndeterminateFiber("line contained in the conic")
    s0 = _dot(_cross(known, w), n)
    t0 = _dot(_cross(u, known), n)
    if a != 0:
        s1, t1 = -b * t0 - a * s0, a * t0
    elif t0 == 0:
        s1, t1 = -c, b
    else:
        s1, t1 = 1, 0
    if s1 == 0 and t1 == 0:
        # b = c = 0 with a = 0 cannot happen here; a double root at (1:0) does
        s1, t1 = 1, 0
    return normalize([s1 * ui + t1 * wi for ui, wi in zip(u, w)])


def sigma(S, p, which):
    """The Vieta involution for projection ``which`` (1: keep x, 2: keep y).

    A double root in the fiber returns ``p`` (p is a fixed point).
    """
    if which == 1:
        return SurfacePoint(p.x, _swap(S.line_in_y(p.x), S.conic_in_y(p.x), p.y))
    if which == 2:
        return SurfacePoint(_swap(S.line_in_x(p.y), S.conic_in_x(p.y), p.x), p.y)
    raise ValueError("which must be 1 or 2")


def phi(S, p):
    return sigma(S, sigma(S, p, 1), 2)


def phi_inverse(S, p):
    return sigma(S, sigma(S, p, 2), 1)


def apply_word(S, p, power):
    """phi^power (negative powers use sigma_1 o sigma_2)."""
    step = phi if power >= 0 else phi_inverse
    for _ in range(abs(power)):
        p = step(S, p)
    return p


@dataclass
class Orbit:
    points: list
    stopped: str = ""            # "", "digit_budget", "indeterminate"

    @property
    def m_reached(self):
        return len(self.points) - 1


def orbit(S, p, steps, inverse=False, digit_budget=DIGIT_BUDGET, check_smooth=False):
    """Forward orbit p, phi(p), ... (or under phi^-1); stops gracefully."""
    step = phi_inverse if inverse else phi
    pts = [p]
    stopped = ""
    for _ in range(steps):
        if len(pts) >= 2:
            # digits grow geometrically; skip a step that would overshoot
            d1, d0 = pts[-1].digits(), max(pts[-2].digits(), 1)
            if d1 * max(d1 / d0, 1.0) > digit_budget:
                stopped = "digit_budget"
                break
        try:
            q = step(S, pts[-1])
        except IndeterminateFiber:
            stopped = "indeterminate"
            break
        if q.digits() > digit_budget:
            stopped = "digit_budget"
            break
        if check_smooth and not is_smooth_at(S, q):
            stopped = "singular"
            break
        pts.append(q)
    return Orbit(pts, stopped)


# ---------------------------------------------------------------------------
# Neron-Severi model


def ns_action(which):
    """Pullback on (D1, D2); columns are images."""
    if which == 1:
        return SIGMA1_STAR
    if which == 2:
        return SIGMA2_STAR
    raise ValueError("which must be 1 or 2")


def phi_star():
    """(sigma_2 o sigma_1)^* = sigma_1^* sigma_2^*."""
    return exact.matmul(exact.to_fraction_matrix(SIGMA1_STAR), exact.to_fraction_matrix(SIGMA2_STAR))


def is_isometry(m, gram=GRAM):
    m = exact.to_fraction_matrix(m)
    g = exact.to_fraction_matrix(gram)
    return exact.matmul(exact.matmul(exact.transpose(m), g), m) == g


def intersect(a, b, gram=GRAM):
    return sum(a[i] * gram[i][j] * b[j] for i in range(2) for j in range(2))


@dataclass(frozen=True)
class K3Characters:
    lam: float
    d_plus: tuple
    d_minus: tuple
    certificates: dict


def eigendivisors_k3():
    """The two nef boundary eigenclasses of phi^* with characters (lam, 1/lam)."""
    m = exact.as_float_array(phi_star())
    tr, det = float(m[0, 0] + m[1, 1]), float(np.linalg.det(m))
    lam = (tr + math.sqrt(tr * tr - 4 * det)) / 2
    out = []
    h = (1.0, 1.0)
    for mu in (lam, 1 / lam):
        # (m - mu) v = 0 with v = (m01, mu - m00)
        v = np.array([m[0, 1], mu - m[0, 0]])
        if abs(v).max() < 1e-12:
            v = np.array([mu - m[1, 1], m[1, 0]])
        if intersect(v, h) < 0:
            v = -v
        v = v / intersect(v, h)
        out.append(tuple(float(c) for c in v))
    dp, dm = out
    certs = {
        "trace": tr, "det": det,
        "self_intersection_plus": intersect(dp, dp),
        "self_intersection_minus": intersect(dm, dm),
        "D_plus_dot_D_minus": intersect(dp, dm),
        "no_minus_two_classes": no_orthogonal_minus_two_classes(),
    }
    return K3Characters(lam, dp, dm, certs)


def no_orthogonal_minus_two_classes(bound=50):
    """2a^2 + 8ab + 2b^2 = -2 has no integer solutions (squares mod 3);
    the search below confirms it on a box."""
    return not any(a * a + 4 * a * b + b * b == -1
                   for a in range(-bound, bound + 1) for b in range(-bound, bound + 1))


# ---------------------------------------------------------------------------
# heights


def log_height(v):
    """log max |v_i| of a primitive integer vector."""
    m = max(abs(c) for c in v)
    if m == 0:
        raise ValueError("zero vector")
    bits = int(gmpy2.bit_length(m))
    if bits <= 1000:
        return math.log(int(m))
    shift = bits - 64
    return math.log(int(m >> shift)) + shift * math.log(2.0)


def height(S, p, cls=(1, 1)):
    """h_{a D1 + b D2}(p) = a h(x) + b h(y)."""
    a, b = cls
    return a * log_height(p.x) + b * log_height(p.y)


# ---------------------------------------------------------------------------
# points


def _isqrt_exact(n):
    if n < 0:
        return None
    r = gmpy2.isqrt(n)
    return r if r * r == n else None


def primitive_vectors(B):
    """Sign-normalized primitive integer 3-vectors with entries in [-B, B]."""
    out = []
    for v in product(range(-B, B + 1), repeat=3):
        if not any(v):
            continue
        if math.gcd(math.gcd(v[0], v[1]), v[2]) != 1:
            continue
        first = next(c for c in v if c)
        if first < 0:
            continue
        out.append(v)
    return out


def fiber_points(S, x, B):
    """All y with |y_i| <= B and (x, y) on S."""
    ell = S.line_in_y(x)
    conic = S.conic_in_y(x)
    ys = set()
    if not any(ell):
        for y in primitive_vectors(B):
            if _eval_conic(conic, y) == 0:
                ys.add(normalize(y))
        return ys
    u, w, _ = _line_basis(ell)
    a, b, c = _binary_quadratic(conic, u, w)
    roots = []
    if a == 0 and b == 0 and c == 0:
        for y in primitive_vectors(B):
            if _dot(ell, y) == 0:
                ys.add(normalize(y))
        return ys
    if a == 0:
        roots.append((1, 0))
        if b != 0 or c != 0:
            roots.append((-c, b))
    else:
        r = _isqrt_exact(b * b - 4 * a * c)
        if r is not None:
            roots += [(-b + r, 2 * a), (-b - r, 2 * a)]
    for s, t in roots:
        if s == 0 and t == 0:
            continue
        y = normalize([s * ui + t * wi for ui, wi in zip(u, w)])
        if max(abs(c) for c in y) <= B:
            ys.add(y)
    return ys


def enumerate_points(S, height_bound, cap=ENUMERATION_CAP):
    """All points with max|x_i|, max|y_i| <= exp(height_bound), sorted."""
    B = int(math.floor(math.exp(height_bound) + 1e-9))
    if (2 * B + 1) ** 3 > cap:
        raise BudgetExceeded(f"box of side {2 * B + 1} exceeds the enumeration cap")
    pts = []
    for x in primitive_vectors(B):
        xs = normalize(x)
        for y in fiber_points(S, xs, B):
            p = SurfacePoint(xs, y)
            if contains(S, p):
                pts.append(p)
    pts.sort(key=lambda p: (height(S, p), tuple(int(c) for c in p.x + p.y)))
    return pts


def period(S, p, period_bound, digit_budget=DIGIT_BUDGET):
    """Smallest k <= period_bound with phi^k(p) = p, else None."""
    q = p
    for k in range(1, period_bound + 1):
        try:
            q = phi(S, q)
        except IndeterminateFiber:
            return None
        if q.digits() > digit_budget:
            return None
        if q == p:
            return k
    return None


def find_periodic(S, height_bound, period_bound=4, digit_budget=DIGIT_BUDGET):
    out = []
    for p in enumerate_points(S, height_bound):
        k = period(S, p, period_bound, digit_budget)
        if k is not None:
            out.append((p, k))
    return out


# ---------------------------------------------------------------------------
# fixture construction


def _kernel_basis(rows, nvar):
    """Integer basis of the rational kernel of ``rows`` (exact RREF)."""
    mat = [[Fraction(int(c)) for c in r] for r in rows]
    pivots = []
    rix = 0
    for col in range(nvar):
        piv = next((i for i in range(rix, len(mat)) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[rix], mat[piv] = mat[piv], mat[rix]
        p = mat[rix][col]
        mat[rix] = [c / p for c in mat[rix]]
        for i in range(len(mat)):
            if i != rix and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[rix])]
        pivots.append(col)
        rix += 1
        if rix == len(mat):
            break
    basis = []
    for free in range(nvar):
        if free in pivots:
            continue
        v = [Fraction(0)] * nvar
        v[free] = Fraction(1)
        for i, col in enumerate(pivots):
            v[col] = -mat[i][free]
        basis.append(_integral(v))
    return basis


def _integral(vals):
    den = _lcm_den(vals)
    ints = [int(v * den) for v in vals]
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    return [c // g for c in ints] if g else ints


def _small_solution(rows, nvar, rng, coeff_range):
    basis = _kernel_basis(rows, nvar)
    if not basis:
        raise ValueError("constraints leave only the zero form")
    while True:
        coeffs = [rng.randint(-coeff_range, coeff_range) for _ in basis]
        v = [sum(c * b[k] for c, b in zip(coeffs, basis)) for k in range(nvar)]
        if any(v):
            return _integral(v)


def build_surface(seed, base_points, periodic_point, coeff_range=2):
    """Random surface through ``base_points`` with ``periodic_point`` fixed by
    both involutions (both fibers tangent there).

    Each form is a random combination, with coefficients in
    [-coeff_range, coeff_range], of an integer basis of the forms meeting
    the linear conditions.
    """
    rng = random.Random(seed)
    pts = [SurfacePoint.of(*p) for p in base_points]
    ps = SurfacePoint.of(*periodic_point)
    allp = pts + [ps]
    lrows = [[int(p.x[a] * p.y[b]) for a in range(3) for b in range(3)] for p in allp]
    lsol = _small_solution(lrows, 9, rng, coeff_range)
    L = [lsol[3 * a:3 * a + 3] for a in range(3)]
    qrows = []
    for p in allp:
        xm = [_mono(p.x, al) for al in MONOMIALS]
        ym = [_mono(p.y, be) for be in MONOMIALS]
        qrows.append([int(xm[i] * ym[j]) for i in range(6) for j in range(6)])
    x, y = ps.x, ps.y
    ell_y = [sum(L[a][b] * x[a] for a in range(3)) for b in range(3)]
    ell_x = [sum(L[a][b] * y[b] for b in range(3)) for a in range(3)]
    # gradients of Q at ps as linear functionals of the 36 coefficients
    gy = [[0] * 36 for _ in range(3)]
    gx = [[0] * 36 for _ in range(3)]
    for i, al in enumerate(MONOMIALS):
        for j, be in enumerate(MONOMIALS):
            for k in range(3):
                if be[k]:
                    d = list(be)
                    d[k] -= 1
                    gy[k][6 * i + j] = int(_mono(x, al) * be[k] * _mono(y, d))
                if al[k]:
                    d = list(al)
                    d[k] -= 1
                    gx[k][6 * i + j] = int(_mono(y, be) * al[k] * _mono(x, d))
    # tangency: grad is parallel to the fiber line, for both projections
    for g, ell in ((gy, ell_y), (gx, ell_x)):
        for (a, b) in ((1, 2), (2, 0), (0, 1)):
            qrows.append([int(g[a][k] * ell[b] - g[b][k] * ell[a]) for k in range(36)])
    qsol = _small_solution(qrows, 36, rng, coeff_range)
    Q = [qsol[6 * i:6 * i + 6] for i in range(6)]
    return WehlerSurface(L, Q, base_points=tuple(pts),
                         meta={"seed": seed, "periodic_point": ps.to_json()})


def validate_fixture(S, steps=5, digit_budget=DIGIT_BUDGET):
    """Check planted points, smoothness and fiber regularity along orbits."""
    report = {"base_points_on_surface": all(contains(S, p) for p in S.base_points)}
    pp = S.meta.get("periodic_point")
    if pp is not None:
        p = SurfacePoint.from_json(pp)
        report["periodic_on_surface"] = contains(S, p)
        report["periodic_smooth"] = bool(is_smooth_at(S, p))
        report["periodic_fixed"] = sigma(S, p, 1) == p and sigma(S, p, 2) == p
    orbits = []
    for p in S.base_points:
        fwd = orbit(S, p, steps, digit_budget=digit_budget, check_smooth=True)
        bwd = orbit(S, p, steps, inverse=True, digit_budget=digit_budget, check_smooth=True)
        orbits.append({"forward": fwd.m_reached, "backward": bwd.m_reached,
                       "stopped": [fwd.stopped, bwd.stopped]})
    report["orbits"] = orbits
    return report
