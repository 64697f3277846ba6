"""Neron-Severi model of E^n for a curve E without complex multiplication.

Divisor classes are symmetric n x n matrices, an integer matrix A acts on
E^n and pulls classes back by the congruence M -> A^T M A, and the
intersection of n classes is n! times their mixed discriminant.  With this
normalization the class of the identity matrix has self-intersection n!.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement, permutations
from math import factorial

import numpy as np

from . import exact
from .character_lattice import LogCharacterMatrix, words
from .cone_engine import (CharacterSystem, CommutingFamily, ConeMap, ConeSpec,
                          common_eigenvectors)
from .errors import DimensionMismatch, EntropyCheckFailed, NotCommuting

PD_THRESHOLD = 1e-9


def _as_matrices(mats):
    out = []
    for m in mats:
        if isinstance(m, np.ndarray) and m.dtype.kind == "f":
            out.append(m)
        else:
            rows = [list(r) for r in m]
            out.append(exact.to_fraction_matrix(rows) if exact.is_exact_matrix(rows) else np.array(rows, dtype=float))
    return out


def _size(mats):
    sizes = {len(m) for m in mats}
    if len(sizes) != 1:
        raise DimensionMismatch("classes of different sizes")
    n = sizes.pop()
    for m in mats:
        if any(len(row) != n for row in m):
            raise DimensionMismatch("classes must be square")
    return n


def mixed_discriminant(*mats):
    """D(M_1, ..., M_n): the coefficient of t_1...t_n in det(sum t_i M_i), over n!.

    Expanding the determinant row by row, the coefficient of t_1...t_n is
    the sum over assignments of a distinct matrix to every row of the
    determinant of the row-mixed matrix.  Exact for rational input.
    """
    mats = _as_matrices(mats)
    n = _size(mats)
    if len(mats) != n:
        raise DimensionMismatch(f"need {n} classes, got {len(mats)}")
    floaty = any(isinstance(m, np.ndarray) for m in mats)
    total = 0.0 if floaty else Fraction(0)
    for perm in permutations(range(n)):
        rows = [list(mats[perm[r]][r]) for r in range(n)]
        if floaty:
            total += float(np.linalg.det(np.array(rows, dtype=float)))
        else:
            total += exact.det(rows)
    return total / factorial(n)


def mixed_discriminant_polarization(*mats):
    """Same quantity by inclusion-exclusion over subsets:
    D = (1/n!) sum_S (-1)^{n-|S|} det(sum_{i in S} M_i)."""
    mats = _as_matrices(mats)
    n = _size(mats)
    if len(mats) != n:
        raise DimensionMismatch(f"need {n} classes, got {len(mats)}")
    floaty = any(isinstance(m, np.ndarray) for m in mats)
    total = 0.0 if floaty else Fraction(0)
    for k in range(1, n + 1):
        for sub in combinations(range(n), k):
            if floaty:
                s = sum(np.asarray(mats[i], dtype=float) for i in sub)
                total += (-1) ** (n - k) * float(np.linalg.det(s))
            else:
                s = [[sum(mats[i][a][b] for i in sub) for b in range(n)] for a in range(n)]
                total += (-1) ** (n - k) * exact.det(s)
    return total / factorial(n)


def intersection_number(*mats):
    mats = _as_matrices(mats)
    return factorial(_size(mats)) * mixed_discriminant(*mats)


def sym_basis(n):
    """Standard basis of symmetric n x n matrices: E_ii and E_ij + E_ji."""
    out = []
    for i in range(n):
        for j in range(i, n):
            m = [[Fraction(0)] * n for _ in range(n)]
            m[i][j] = m[j][i] = Fraction(1)
            out.append(exact.to_fraction_matrix(m))
    return out


def is_weakly_numerically_trivial(partial, codim=None, tol=0.0):
    """True iff (H_1, ..., H_{n-codim}) -> D(partial, H...) vanishes identically.

    By multilinearity and symmetry it suffices to test multisets of basis
    elements.  ``tol`` applies to float input; rational input is exact.
    """
    partial = _as_matrices(partial)
    if codim is None:
        codim = len(partial)
    if codim != len(partial):
        raise DimensionMismatch("codim must equal the number of classes given")
    n = _size(partial)
    if codim > n:
        raise DimensionMismatch("more classes than the dimension")
    basis = sym_basis(n)
    for hs in combinations_with_replacement(basis, n - codim):
        val = mixed_discriminant(*partial, *hs)
        if abs(val) > tol:
            return False
    return True


def pullback(a, m):
    """A^T M A."""
    a = _as_matrices([a])[0]
    m = _as_matrices([m])[0]
    if isinstance(a, np.ndarray) or isinstance(m, np.ndarray):
        a = np.asarray(a, dtype=float)
        return a.T @ np.asarray(m, dtype=float) @ a
    return exact.matmul(exact.matmul(exact.transpose(a), m), a)


@dataclass(frozen=True, eq=False)
class AutoAction:
    A: tuple
    label: str = ""

    def __post_init__(self):
        rows = [list(r) for r in self.A]
        if not exact.is_integer_matrix(rows):
            raise ValueError("automorphism matrices must be integral")
        mat = exact.to_fraction_matrix(rows)
        object.__setattr__(self, "A", mat)
        if abs(exact.det(mat)) != 1:
            raise ValueError(f"{self.label or 'matrix'} has |det| != 1")

    @property
    def n(self):
        return len(self.A)

    def array(self):
        return exact.as_float_array(self.A)

    def cone_map(self):
        return ConeMap.congruence_map(self.A, self.label)


@dataclass(frozen=True, eq=False)
class EigendivisorSystem:
    characters: CharacterSystem
    classes: tuple          # D_i as float arrays, unit trace, rank one
    eigenvectors: tuple     # unit v_i with A^T v_i = mu_i v_i
    D: np.ndarray
    certificates: dict = field(default_factory=dict)


def eigendivisor_system(family, entropy_bound=3):
    """Common rank-one eigendivisors D_i = v_i v_i^T of a commuting family.

    The characters are chi_i(A) = mu_i(A)^2 where A^T v_i = mu_i v_i.
    """
    family = [f if isinstance(f, AutoAction) else AutoAction(f, f"g{k}") for k, f in enumerate(family)]
    n = family[0].n
    if any(f.n != n for f in family):
        raise DimensionMismatch("automorphisms of different sizes")
    for f, g in combinations(family, 2):
        if exact.matmul(f.A, g.A) != exact.matmul(g.A, f.A):
            raise NotCommuting(f"{f.label} and {g.label} do not commute")
    labels = tuple(f.label for f in family)
    entropy = _entropy_check(family, entropy_bound)
    cfam = CommutingFamily.of([f.cone_map() for f in family], labels)
    chars = common_eigenvectors(cfam, ConeSpec.psd(n))
    system = CharacterSystem.from_characters(chars)
    classes = tuple(np.asarray(c.eigenvector, dtype=float) for c in chars)
    vecs = []
    for d in classes:
        w, v = np.linalg.eigh(d)
        vec = v[:, -1]
        nz = np.flatnonzero(np.abs(vec) > 1e-12)
        if vec[nz[0]] < 0:
            vec = -vec
        vecs.append(vec)
    dsum = sum(classes)
    mineig = float(np.linalg.eigvalsh(dsum).min())
    inter = intersection_number(*classes) if len(classes) == n else 0.0
    vmat = np.column_stack(vecs)
    certs = {
        "count": len(chars),
        "distinct": len(chars) == n and _distinct(system.values),
        "D_min_eigenvalue": mineig,
        "D_positive_definite": mineig >= PD_THRESHOLD,
        "intersection": float(inter),
        "det_V_squared": float(np.linalg.det(vmat) ** 2) if len(vecs) == n else 0.0,
        "intersection_positive": inter > 0,
        "entropy": entropy,
    }
    if len(chars) == n and n > 1:
        lm = LogCharacterMatrix.from_characters(system)
        sub = lm.L[: n - 1, :] if lm.L.shape[1] == n - 1 else None
        certs["regulator"] = float(abs(np.linalg.det(sub))) if sub is not None else None
    return EigendivisorSystem(system, classes, tuple(vecs), dsum, certs)


def _distinct(values, tol=1e-9):
    for a, b in combinations(values, 2):
        if np.abs(np.asarray(a) - np.asarray(b)).max() <= tol * max(np.abs(a).max(), np.abs(b).max()):
            return False
    return True


def _entropy_check(family, bound, tol=1e-9):
    """Every nontrivial word of sup-norm <= bound has an eigenvalue off the unit circle."""
    checked = 0
    for e in words(len(family), bound):
        if not any(e):
            continue
        m = exact.identity(family[0].n)
        for f, k in zip(family, e):
            m = exact.matmul(exact.matpow(f.A, k), m)
        lam = float(np.abs(np.linalg.eigvals(exact.as_float_array(m))).max()) ** 2
        if lam <= 1 + tol:
            raise EntropyCheckFailed(f"word {e} has first dynamical degree {lam:.12g}")
        checked += 1
    return {"words_checked": checked, "bound": bound}


def dynamical_degree_profile(a, m_max=20):
    """lambda_0..lambda_n by two independent routes.

    ``spectral``: lambda_k = prod of the k largest mu^2 over eigenvalue moduli.
    ``limit``:    the growth rate of a_m = (A^m)^*H^k . H^{n-k} with H = I,
    W_m = (A^m)^T A^m.  The integer sequence a_m satisfies a linear
    recurrence; its minimal recurrence is fitted exactly from m <= m_max and
    the dominant root is reported.
    """
    a = a if isinstance(a, AutoAction) else AutoAction(a)
    n = a.n
    mods = np.sort(np.abs(np.linalg.eigvals(a.array())))[::-1]
    spectral = [float(np.prod(mods[:k] ** 2)) for k in range(n + 1)]
    eye = exact.identity(n)
    seqs = {k: [] for k in range(n + 1)}
    p = eye
    for m in range(m_max + 1):
        w = exact.matmul(exact.transpose(p), p)
        for k in range(n + 1):
            seqs[k].append(mixed_discriminant(*([w] * k + [eye] * (n - k))) * factorial(n))
        p = exact.matmul(a.A, p)
    limit = [_recurrence_growth(seqs[k]) for k in range(n + 1)]
    return {"spectral": spectral, "limit": limit,
            "sequences": {k: [exact.format_rational(x) for x in v[:6]] for k, v in seqs.items()}}


def _recurrence_growth(seq):
    """Dominant root modulus of the minimal linear recurrence of ``seq``."""
    seq = [Fraction(x) for x in seq]
    if all(x == seq[0] for x in seq):
        return 1.0
    for order in range(1, len(seq) // 2):
        rows = [seq[i:i + order] for i in range(len(seq) - order)]
        rhs = [seq[i + order] for i in range(len(seq) - order)]
        coeffs = _solve_exact(rows[:order], rhs[:order])
        if coeffs is None:
            continue
        if all(sum(c * x for c, x in zip(coeffs, r)) == y for r, y in zip(rows, rhs)):
            # a_{m+order} = sum c_k a_{m+k}  ->  t^order - c_{order-1} t^{order-1} - ... - c_0
            poly = [1.0] + [-float(c) for c in reversed(coeffs)]
            roots = np.roots(poly)
            return float(np.abs(roots).max())
    # no exact recurrence: fall back to the ratio of the last terms
    return float(seq[-1] / seq[-2]) if seq[-2] else float("nan")


def _solve_exact(rows, rhs):
    n = len(rows)
    aug = [list(map(Fraction, r)) for r in rows]
    if exact.det(aug) == 0:
        return None
    inv = exact.inverse(aug)
    return [sum(inv[i][j] * rhs[j] for j in range(n)) for i in range(n)]
