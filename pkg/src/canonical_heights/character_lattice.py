"""Log-character embedding, lattice certificates and distinguished elements.

A group word is an integer exponent vector ``e`` for ``g = prod g_j^{e_j}``.
The log-character matrix ``L`` has ``L[i, j] = log chi_i(g_j)`` so that
``L @ e`` is the image of ``g`` under the log-character map.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb

import numpy as np

from . import exact
from .errors import BudgetExceeded, NotFoundWithinBound, RankDeficient

MARGIN = 1e-9
ENUMERATION_CAP = 10**6


@dataclass(frozen=True, eq=False)
class LogCharacterMatrix:
    L: np.ndarray
    labels: tuple

    @classmethod
    def from_characters(cls, system):
        """Build from a ``CharacterSystem`` (positive values required)."""
        vals = np.asarray(system.values, dtype=float)
        if (vals <= 0).any():
            raise ValueError("characters must be positive")
        return cls(np.log(vals), tuple(system.labels))

    @property
    def shape(self):
        return self.L.shape

    def image(self, word):
        return self.L @ np.asarray(word, dtype=float)

    def column_defect(self):
        return float(np.abs(self.L.sum(axis=0)).max()) if self.L.size else 0.0


def words(rank, bound):
    """Exponent vectors with sup-norm <= bound, ordered by l1 norm then lex."""
    return sorted(product(range(-bound, bound + 1), repeat=rank),
                  key=lambda e: (sum(map(abs, e)), e))


def dominance_certificate(L):
    """Dominance check on square L: deleting row i and column i leaves a
    strictly diagonally dominant matrix (rows sign-normalized so the
    diagonal is positive).

    Because columns of L sum to zero the dominance holds column-wise; row
    dominance is reported alongside.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    out = []
    for i in range(n):
        keep = [k for k in range(n) if k != i]
        m = L[np.ix_(keep, keep)]
        d = np.diag(m)
        signs = np.where(d < 0, -1.0, 1.0)
        m = m * signs[:, None]
        diag = np.abs(np.diag(m))
        off = np.abs(m) - np.diag(diag)
        row_ok = bool((np.diag(m) > 0).all() and (diag > off.sum(axis=1)).all())
        col_ok = bool((np.diag(m) > 0).all() and (diag > off.sum(axis=0)).all())
        out.append({"deleted": i, "row_dominant": row_ok, "column_dominant": col_ok,
                    "dominant": row_ok or col_ok,
                    "det": float(np.linalg.det(m)) if m.size else 1.0})
    return out


def lattice_certificate(L, bound=3, distinguished=None):
    """Rank, zero-sum defect, dominance and empirical discreteness gap.

    Dominance is checked on L itself when it is square, otherwise on the
    matrix of the ``distinguished`` words (one per character) when given.
    """
    lm = L if isinstance(L, LogCharacterMatrix) else LogCharacterMatrix(np.asarray(L, dtype=float), ())
    mat = lm.L
    m, r = mat.shape
    scale = np.abs(mat).max() if mat.size else 0.0
    rank = int(np.linalg.matrix_rank(mat, tol=1e-9 * scale)) if scale > 0 else 0
    if rank < r:
        raise RankDeficient(f"log-character matrix has rank {rank} < {r}")
    report = {"shape": [m, r], "rank": rank, "zero_sum_defect": lm.column_defect()}
    square = mat if m == r else None
    if square is None and distinguished is not None:
        square = distinguished_matrix(mat, distinguished)
    if square is not None:
        dom = dominance_certificate(square)
        report["dominance"] = dom
        report["dominance_ok"] = all(d["dominant"] for d in dom)
    gap = np.inf
    for e in words(r, bound):
        if not any(e):
            continue
        gap = min(gap, float(np.linalg.norm(mat @ np.asarray(e, dtype=float))))
    report["gap"] = gap
    report["gap_bound"] = bound
    return report


def find_distinguished(L, i, bound=3):
    """Shortest word w with (L w)_j < 0 for every j != i.

    Shortest means minimal l1 norm, ties broken lexicographically.
    """
    lm = L if isinstance(L, LogCharacterMatrix) else LogCharacterMatrix(np.asarray(L, dtype=float), ())
    mat = lm.L
    m, r = mat.shape
    if not 0 <= i < m:
        raise IndexError(f"character index {i} out of range")
    rank = int(np.linalg.matrix_rank(mat)) if np.abs(mat).max() > 0 else 0
    if rank < r:
        raise RankDeficient(f"log-character matrix has rank {rank} < {r}")
    margin = MARGIN * np.linalg.norm(mat)
    others = [j for j in range(m) if j != i]
    for e in words(r, bound):
        if not any(e):
            continue
        img = mat @ np.asarray(e, dtype=float)
        if (img[others] <= -margin).all():
            return tuple(int(x) for x in e)
    raise NotFoundWithinBound(f"no distinguished word for index {i} with |e|_inf <= {bound}")


def distinguished_matrix(L, found):
    """M[i][j] = log chi_i(g_j) for the distinguished words g_j."""
    mat = L.L if isinstance(L, LogCharacterMatrix) else np.asarray(L, dtype=float)
    return np.column_stack([mat @ np.asarray(w, dtype=float) for w in found])


def subgroup_rank(L, found):
    """Rank of every (n-1)-subset of distinguished words, via their log images."""
    mat = distinguished_matrix(L, found)
    n = mat.shape[1]
    ranks = []
    for drop in range(n):
        cols = [k for k in range(n) if k != drop]
        ranks.append(int(np.linalg.matrix_rank(mat[:, cols], tol=1e-9 * np.abs(mat).max())))
    return ranks


# ---------------------------------------------------------------------------
# discreteness of spectral radii


def coefficient_box(degree, bound):
    """|c_j| <= C(d, j) bound^j for the coefficients of t^d + c_1 t^{d-1} + ..."""
    return [int(np.floor(comb(degree, j) * bound**j + 1e-12)) for j in range(1, degree + 1)]


def bounded_spectral_radii(degree, bound, cap=ENUMERATION_CAP, tol=1e-9):
    """Sorted distinct spectral radii >= 1 of monic integer polynomials of the
    given degree whose roots all have modulus <= bound."""
    if degree < 1:
        raise ValueError("degree must be positive")
    box = coefficient_box(degree, bound)
    size = 1
    for b in box:
        size *= 2 * b + 1
    if size > cap:
        raise BudgetExceeded(f"coefficient box has {size} members > cap {cap}")
    found = []
    for coeffs in product(*[range(-b, b + 1) for b in box]):
        poly = [Fraction(1)] + [Fraction(c) for c in coeffs]
        sf = exact.squarefree_part(poly)
        roots = np.roots([float(c) for c in sf]) if len(sf) > 1 else np.array([])
        mods = np.abs(roots)
        if mods.size == 0:
            continue
        if mods.max() > bound * (1 + tol):
            continue
        rho = float(mods.max())
        if abs(rho - round(rho)) <= tol * rho:
            # integer radii come from integer roots; drop root-finder noise
            rho = float(round(rho))
        if rho >= 1:
            found.append(rho)
    found.sort()
    out = []
    for v in found:
        if not out or abs(v - out[-1]) > tol * max(1.0, v):
            out.append(v)
    return out
