"""Perron-Frobenius computations for maps preserving a salient full cone.

Three cone kinds are supported:

* ``orthant(d)``   -- the nonnegative orthant of R^d;
* ``psd(k)``       -- positive semidefinite k x k matrices, ambient dimension
  k(k+1)/2.  Vectors of this kind are exchanged as symmetric k x k arrays;
  internally they are flattened to upper-triangle coordinates
  ``(M_00, M_01, ..., M_11, ...)``.  Maps must be congruences M -> A^T M A;
* ``polyhedral``   -- given by generators or by half-spaces ``h . v >= 0``.

The common-eigenvector search follows the eigencone restriction argument:
starting from the whole cone, each map in turn is restricted to the span of
the current cone, its spectral radius rho is taken there, and the cone is cut
down to the rho-eigenvectors it contains.  For polyhedral cones the span of
the cut cone comes from one LP that detects implicit equalities.  For the PSD
cone it comes from ranges: a PSD matrix fixed (up to the scalar rho) by
M -> A^T M A has its range inside the span of the eigenvectors of A^T whose
eigenvalues have modulus sqrt(rho), and that bound is attained.
"""

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np
from scipy.linalg import null_space, orth
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from . import exact
from .errors import (ConeNotPreserved, DimensionMismatch, InvalidCone,
                     NoConeEigenvector, NotCommuting)

DEFAULT_TOL = 1e-9
# singular values below NULL_RTOL * scale count as zero when extracting eigenspaces
NULL_RTOL = 1e-8


# ---------------------------------------------------------------------------
# symmetric-matrix coordinates


def svec(m):
    m = np.asarray(m, dtype=float)
    k = m.shape[0]
    return np.array([m[i, j] for i in range(k) for j in range(i, k)])


def smat(v, k):
    m = np.zeros((k, k))
    idx = 0
    for i in range(k):
        for j in range(i, k):
            m[i, j] = m[j, i] = v[idx]
            idx += 1
    return m


def psd_size(ambient_dim):
    k = int(round((np.sqrt(8 * ambient_dim + 1) - 1) / 2))
    if k * (k + 1) // 2 != ambient_dim:
        raise DimensionMismatch(f"{ambient_dim} is not a triangular number")
    return k


# ---------------------------------------------------------------------------
# cones


@dataclass(frozen=True, eq=False)
class ConeSpec:
    kind: str
    ambient_dim: int
    size: int = 0
    halfspaces: np.ndarray = field(default=None, repr=False)
    generators: np.ndarray = field(default=None, repr=False)

    @classmethod
    def orthant(cls, dim):
        eye = np.eye(dim)
        return cls("orthant", dim, halfspaces=eye, generators=eye)

    @classmethod
    def psd(cls, size):
        return cls("psd", size * (size + 1) // 2, size=size)

    @classmethod
    def polyhedral(cls, generators=None, halfspaces=None):
        """Build a polyhedral cone and certify it is salient and full.

        Exactly one of ``generators`` (rows are rays) or ``halfspaces``
        (rows ``h`` with ``h . v >= 0``) must be given.
        """
        if (generators is None) == (halfspaces is None):
            raise InvalidCone("give exactly one of generators / halfspaces")
        if generators is not None:
            gens = _unit_rows(np.atleast_2d(np.asarray(generators, dtype=float)))
            dim = gens.shape[1]
            if np.linalg.matrix_rank(gens) < dim:
                raise InvalidCone("generators do not span the ambient space")
            if not _generators_salient(gens):
                raise InvalidCone("cone is not salient")
            hs = _facets_of_cone(gens)
            gens = _dedupe_rows(gens)
        else:
            hs = _unit_rows(np.atleast_2d(np.asarray(halfspaces, dtype=float)))
            dim = hs.shape[1]
            if np.linalg.matrix_rank(hs) < dim:
                raise InvalidCone("cone is not salient (half-spaces leave a lineality space)")
            if not _halfspaces_full(hs):
                raise InvalidCone("half-spaces cut out a cone without interior")
            gens = _facets_of_cone(hs)
            hs = _dedupe_rows(hs)
        return cls("polyhedral", dim, halfspaces=hs, generators=gens)

    # -- vector conversions -------------------------------------------------

    def flatten(self, v):
        if self.kind == "psd":
            v = np.asarray(v, dtype=float)
            return svec(v) if v.ndim == 2 else v
        return np.asarray(v, dtype=float).reshape(-1)

    def unflatten(self, v):
        return smat(v, self.size) if self.kind == "psd" else np.asarray(v, dtype=float)

    def contains(self, v, tol=DEFAULT_TOL):
        x = self.flatten(v)
        scale = max(np.linalg.norm(x), 1e-300)
        if self.kind == "psd":
            return bool(np.linalg.eigvalsh(smat(x, self.size)).min() >= -tol * scale)
        return bool((self.halfspaces @ x >= -tol * scale).all())

    def sample_generators(self, count=12, seed=0):
        """Rays to test invariance on (all rays for polyhedral cones)."""
        if self.kind != "psd":
            return [g for g in self.generators]
        rng = np.random.default_rng(seed)
        out = [svec(np.outer(e, e)) for e in np.eye(self.size)]
        for _ in range(count):
            w = rng.normal(size=self.size)
            out.append(svec(np.outer(w, w)))
        return out

    def to_json(self):
        if self.kind == "orthant":
            return {"kind": "orthant", "dim": self.ambient_dim}
        if self.kind == "psd":
            return {"kind": "psd", "size": self.size}
        return {"kind": "polyhedral", "halfspaces": self.halfspaces.tolist()}

    @classmethod
    def from_json(cls, obj):
        kind = obj.get("kind")
        if kind == "orthant":
            return cls.orthant(int(obj["dim"]))
        if kind == "psd":
            return cls.psd(int(obj["size"]))
        if kind == "polyhedral":
            if "generators" in obj:
                return cls.polyhedral(generators=obj["generators"])
            return cls.polyhedral(halfspaces=obj["halfspaces"])
        raise InvalidCone(f"unknown cone kind {kind!r}")


def _unit_rows(a):
    norms = np.linalg.norm(a, axis=1)
    if (norms == 0).any():
        raise InvalidCone("zero generator / half-space")
    return a / norms[:, None]


def _dedupe_rows(a, tol=1e-9):
    out = []
    for row in a:
        if not any(np.linalg.norm(row - r) < tol for r in out):
            out.append(row)
    return np.array(out)


def _generators_salient(gens):
    # a nonzero nonnegative combination summing to 0 witnesses a line in the cone
    m = gens.shape[0]
    res = linprog(np.zeros(m), A_eq=np.vstack([gens.T, np.ones((1, m))]),
                  b_eq=np.concatenate([np.zeros(gens.shape[1]), [1.0]]),
                  bounds=[(0, None)] * m, method="highs")
    return res.status == 2


def _halfspaces_full(hs):
    d = hs.shape[1]
    # maximise t subject to hs x >= t, |x_i| <= 1
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-hs, np.ones((hs.shape[0], 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(hs.shape[0]),
                  bounds=[(-1, 1)] * d + [(None, 1)], method="highs")
    return res.status == 0 and -res.fun > 1e-9


def _facets_of_cone(rays):
    """Inward unit normals of the facets of cone(rays) (a full, salient cone)."""
    d = rays.shape[1]
    if d == 1:
        return np.array([[np.sign(rays[0, 0])]])
    if d == 2:
        angles = np.arctan2(rays[:, 1], rays[:, 0])
        # salient 2d cone: rotate so the angular gap containing no ray is at the cut
        order = np.sort(angles)
        gaps = np.diff(np.concatenate([order, [order[0] + 2 * np.pi]]))
        k = int(np.argmax(gaps))
        lo, hi = order[(k + 1) % len(order)], order[k]
        a = np.array([np.cos(lo), np.sin(lo)])
        b = np.array([np.cos(hi), np.sin(hi)])
        na = np.array([-a[1], a[0]])
        nb = np.array([b[1], -b[0]])
        return _dedupe_rows(np.array([na, nb]))
    pts = np.vstack([np.zeros(d), rays])
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise InvalidCone(f"cannot compute facets: {exc}") from exc
    normals = [-eq[:-1] for eq in hull.equations if abs(eq[-1]) < 1e-9]
    if not normals:
        raise InvalidCone("no facet through the apex")
    return _dedupe_rows(_unit_rows(np.array(normals)))


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True, eq=False)
class ConeMap:
    """A linear map on the ambient space of a cone.

    ``exact`` keeps the rational matrix when every entry is rational, so
    characteristic polynomials and commutation checks are exact.
    ``congruence`` records A for PSD maps M -> A^T M A.
    """

    array: np.ndarray
    exact: tuple = None
    congruence: tuple = None
    label: str = ""

    @classmethod
    def from_matrix(cls, matrix, label=""):
        if isinstance(matrix, np.ndarray) and matrix.dtype.kind == "f":
            return cls(np.array(matrix, dtype=float), None, None, label)
        rows = [list(r) for r in matrix]
        if exact.is_exact_matrix(rows):
            ex = exact.to_fraction_matrix(rows)
            return cls(exact.as_float_array(ex), ex, None, label)
        return cls(np.array(rows, dtype=float), None, None, label)

    @classmethod
    def congruence_map(cls, a, label=""):
        """The map M -> A^T M A written in upper-triangle coordinates."""
        rows = [list(r) for r in a]
        k = len(rows)
        is_ex = exact.is_exact_matrix(rows)
        amat = exact.to_fraction_matrix(rows) if is_ex else np.array(rows, dtype=float)
        basis = []
        for i in range(k):
            for j in range(i, k):
                basis.append((i, j))
        cols = []
        for (i, j) in basis:
            # image of E_ij + E_ji (or E_ii): A^T E A has entries A[i,p]A[j,q] + A[j,p]A[i,q]
            img = []
            for (p, q) in basis:
                if i == j:
                    val = amat[i][p] * amat[i][q]
                else:
                    val = amat[i][p] * amat[j][q] + amat[j][p] * amat[i][q]
                img.append(val)
            cols.append(img)
        mat = [[cols[c][r] for c in range(len(basis))] for r in range(len(basis))]
        if is_ex:
            ex = exact.to_fraction_matrix(mat)
            return cls(exact.as_float_array(ex), ex, amat, label)
        return cls(np.array(mat, dtype=float), None, np.array(amat), label)

    @property
    def dim(self):
        return self.array.shape[0]

    @property
    def congruence_array(self):
        if self.congruence is None:
            return None
        if isinstance(self.congruence, np.ndarray):
            return self.congruence
        return exact.as_float_array(self.congruence)

    def apply(self, v):
        return self.array @ v

    def compose(self, other, label=None):
        """self o other (apply ``other`` first)."""
        label = label if label is not None else f"{self.label}*{other.label}"
        if self.congruence is not None and other.congruence is not None:
            # (A^T (B^T M B) A) = (BA)^T M (BA)
            if self.exact is not None and other.exact is not None:
                return ConeMap.congruence_map(exact.matmul(other.congruence, self.congruence), label)
            return ConeMap.congruence_map(other.congruence_array @ self.congruence_array, label)
        if self.exact is not None and other.exact is not None:
            ex = exact.matmul(self.exact, other.exact)
            return ConeMap(exact.as_float_array(ex), ex, None, label)
        return ConeMap(self.array @ other.array, None, None, label)

    def inverse(self, label=None):
        label = label if label is not None else f"{self.label}^-1"
        if self.congruence is not None:
            if self.exact is not None:
                return ConeMap.congruence_map(exact.inverse(self.congruence), label)
            return ConeMap.congruence_map(np.linalg.inv(self.congruence_array), label)
        if self.exact is not None:
            ex = exact.inverse(self.exact)
            return ConeMap(exact.as_float_array(ex), ex, None, label)
        return ConeMap(np.linalg.inv(self.array), None, None, label)

    def power(self, e, label=None):
        label = label if label is not None else f"{self.label}^{e}"
        base = self.inverse() if e < 0 else self
        out = identity_map(self.dim, congruence_size=_congruence_size(self))
        for _ in range(abs(e)):
            out = base.compose(out)
        return ConeMap(out.array, out.exact, out.congruence, label)

    def is_invertible(self):
        if self.exact is not None:
            return exact.det(self.exact) != 0
        return abs(np.linalg.det(self.array)) > 1e-12 * max(1.0, np.abs(self.array).max()) ** self.dim

    def to_json(self):
        out = {"label": self.label}
        if self.congruence is not None:
            out["congruence"] = exact.format_matrix(self.congruence)
        else:
            out["matrix"] = exact.format_matrix(self.exact if self.exact is not None else self.array)
        return out

    @classmethod
    def from_json(cls, obj):
        label = obj.get("label", "")
        if "congruence" in obj:
            return cls.congruence_map(exact.parse_matrix(obj["congruence"]), label)
        return cls.from_matrix(exact.parse_matrix(obj["matrix"]), label)


def _congruence_size(m):
    return None if m.congruence is None else len(m.congruence)


def identity_map(dim, congruence_size=None):
    if congruence_size is not None:
        return ConeMap.congruence_map(exact.identity(congruence_size), "id")
    return ConeMap.from_matrix(exact.identity(dim), "id")


@dataclass(frozen=True, eq=False)
class CommutingFamily:
    maps: tuple
    labels: tuple

    @classmethod
    def of(cls, maps, labels=None, tol=DEFAULT_TOL):
        maps = tuple(maps)
        if labels is None:
            labels = tuple(m.label or f"g{i}" for i, m in enumerate(maps))
        dims = {m.dim for m in maps}
        if len(dims) != 1:
            raise DimensionMismatch("maps act on different spaces")
        for a, b in combinations(maps, 2):
            if not commute(a, b, tol):
                raise NotCommuting(f"{a.label} and {b.label} do not commute")
        return cls(maps, tuple(labels))

    def __len__(self):
        return len(self.maps)

    def word(self, exponents):
        out = identity_map(self.maps[0].dim, congruence_size=_congruence_size(self.maps[0]))
        for m, e in zip(self.maps, exponents):
            if e:
                out = m.power(e).compose(out)
        return ConeMap(out.array, out.exact, out.congruence, word_label(self.labels, exponents))


def word_label(labels, exponents):
    parts = []
    for lab, e in zip(labels, exponents):
        if e == 1:
            parts.append(lab)
        elif e:
            parts.append(f"{lab}^{e}")
    return "*".join(parts) or "id"


def commute(a, b, tol=DEFAULT_TOL):
    if a.exact is not None and b.exact is not None:
        return exact.matmul(a.exact, b.exact) == exact.matmul(b.exact, a.exact)
    diff = np.abs(a.array @ b.array - b.array @ a.array).max()
    scale = np.abs(a.array).max() * np.abs(b.array).max()
    return diff <= tol * max(scale, 1e-300)


def preserves(m, cone, tol=DEFAULT_TOL):
    """Check that ``m`` maps (sampled) cone generators into the cone."""
    if m.dim != cone.ambient_dim:
        raise DimensionMismatch(f"map of size {m.dim} on cone of dimension {cone.ambient_dim}")
    if cone.kind == "psd":
        # congruences preserve PSD; other maps are tested on sampled rays
        if m.congruence is not None:
            return True
    for g in cone.sample_generators():
        if not cone.contains(m.apply(g), tol):
            return False
    return True


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True, eq=False)
class Character:
    values: tuple
    eigenvector: np.ndarray
    labels: tuple = ()

    def value(self, label):
        return self.values[self.labels.index(label)]

    def to_json(self):
        return {"values": {lab: float(v) for lab, v in zip(self.labels, self.values)},
                "eigenvector": np.asarray(self.eigenvector).tolist()}


@dataclass(frozen=True, eq=False)
class CharacterSystem:
    """Characters chi_i of a group, sampled on its generators.

    ``values[i][j] = chi_i(generator_j)``; ``eigenvectors[i]`` is the
    common eigenvector (an eigendivisor class) attached to chi_i.
    """

    labels: tuple
    values: np.ndarray
    eigenvectors: tuple

    @classmethod
    def from_characters(cls, chars):
        labels = chars[0].labels
        return cls(labels, np.array([c.values for c in chars], dtype=float),
                   tuple(c.eigenvector for c in chars))

    @property
    def size(self):
        return self.values.shape[0]

    def on_word(self, exponents):
        """chi_i(g) for every i, g = prod generator_j^{e_j}."""
        logs = np.log(self.values) @ np.asarray(exponents, dtype=float)
        return np.exp(logs)

    def characters(self):
        return [Character(tuple(row), vec, self.labels) for row, vec in zip(self.values, self.eigenvectors)]

    def to_json(self):
        return {"labels": list(self.labels),
                "values": self.values.tolist(),
                "eigenvectors": [np.asarray(v).tolist() for v in self.eigenvectors]}


# ---------------------------------------------------------------------------
# spectral radius and PF eigenvectors


def spectral_radius(m):
    """(rho, characteristic polynomial) of a map.

    The polynomial is exact (``Fraction`` coefficients, highest degree
    first) when the matrix is rational.
    """
    a = m.array if isinstance(m, ConeMap) else np.asarray(m, dtype=float)
    if isinstance(m, ConeMap) and m.exact is not None:
        poly = exact.charpoly(m.exact)
    else:
        poly = list(np.poly(a))
    rho = float(np.abs(np.linalg.eigvals(a)).max()) if a.size else 0.0
    return rho, poly


def pf_eigenvector(m, cone, tol=DEFAULT_TOL):
    """A cone eigenvector for the spectral radius (Birkhoff).

    Returns ``(rho, v)``; ``v`` is normalized (max-norm one for
    orthant/polyhedral cones, trace one for PSD) and given as a matrix for
    the PSD kind.
    """
    if not preserves(m, cone, max(tol, 1e-9)):
        raise ConeNotPreserved(f"{m.label or 'map'} does not preserve the cone")
    state = _initial_state(cone)
    state, rho = _restrict(state, m, cone, tol)
    return rho, cone.unflatten(_normalize(_central_vector(state, cone, [m]), cone))


def _normalize(v, cone):
    if cone.kind == "psd":
        tr = np.trace(smat(v, cone.size))
        return v / tr
    v = v / np.abs(v).max()
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v


@dataclass
class _State:
    basis: np.ndarray        # orthonormal columns spanning the current cone
    rng: np.ndarray = None   # PSD kind: orthonormal basis of the admissible range


def _initial_state(cone):
    st = _State(np.eye(cone.ambient_dim))
    if cone.kind == "psd":
        st.rng = np.eye(cone.size)
    return st


def _restrict(state, m, cone, tol):
    """One eigencone restriction step; returns (new_state, rho)."""
    basis = state.basis
    img = m.array @ basis
    r = basis.T @ img
    resid = np.linalg.norm(img - basis @ r)
    scale = max(np.linalg.norm(m.array), 1.0)
    if resid > 1e-7 * scale:
        raise NotCommuting(f"{m.label or 'map'} does not preserve the current eigenspace")
    eig = np.linalg.eigvals(r)
    rho = float(np.abs(eig).max())
    rscale = max(np.linalg.norm(r), 1.0)
    eigsp = null_space(r - rho * np.eye(r.shape[0]), rcond=NULL_RTOL * rscale / max(np.linalg.norm(r - rho * np.eye(r.shape[0])), 1e-300))
    if eigsp.shape[1] == 0:
        eigsp = _smallest_singular(r - rho * np.eye(r.shape[0]))
    w = basis @ eigsp
    if cone.kind == "psd":
        new = _psd_restrict(state, m, w, rho, cone, tol)
    else:
        new = _State(_polyhedral_span(cone.halfspaces, w))
    if new.basis.shape[1] == 0:
        raise NoConeEigenvector(f"eigenspace of {m.label or 'map'} meets the cone only at 0")
    return new, rho


def _smallest_singular(a):
    _, _, vt = np.linalg.svd(a)
    return vt[-1:].T


def _polyhedral_span(hs, w):
    """Orthonormal basis of span(C cap W) for C = {h.v >= 0}, W = col span of w."""
    g = hs @ w
    g_norm = np.linalg.norm(g, axis=1)
    active = g_norm > 1e-12
    rows = g[active] / g_norm[active, None]
    k, p = w.shape[1], rows.shape[0]
    if p == 0:
        return orth(w)
    # variables (c, s): maximise sum s, s_i <= rows_i c, 0 <= s_i <= 1, rows c >= 0
    cvec = np.concatenate([np.zeros(k), -np.ones(p)])
    a_ub = np.vstack([np.hstack([-rows, np.eye(p)]),
                      np.hstack([-rows, np.zeros((p, p))])])
    b_ub = np.zeros(2 * p)
    res = linprog(cvec, A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None)] * k + [(0, 1)] * p, method="highs")
    if res.status != 0:
        # unbounded c directions cannot occur for a salient cone; be conservative
        implicit = np.ones(p, dtype=bool)
    else:
        implicit = res.x[k:] < 0.5
    if implicit.any():
        coeff = null_space(rows[implicit], rcond=1e-9)
    else:
        coeff = np.eye(k)
    if coeff.shape[1] == 0:
        return np.zeros((w.shape[0], 0))
    return orth(w @ coeff)


def _psd_restrict(state, m, w, rho, cone, tol):
    """PSD eigencone span: eigenspace cap {M : range M within R}."""
    if m.congruence is None:
        raise ConeNotPreserved("PSD maps must be congruences M -> A^T M A")
    k = cone.size
    at = m.congruence_array.T
    if rho <= 0:
        u = null_space(at, rcond=1e-12)
    else:
        b = at / np.sqrt(rho)
        vals, vecs = np.linalg.eig(b)
        pick = np.abs(np.abs(vals) - 1.0) <= 1e-7
        if not pick.any():
            pick = np.abs(np.abs(vals) - 1.0) <= 1e-5
        cols = vecs[:, pick]
        u = orth(np.hstack([cols.real, cols.imag]), rcond=1e-7) if cols.size else np.zeros((k, 0))
    rng = _intersect(state.rng, u)
    if rng.shape[1] == 0:
        return _State(np.zeros((w.shape[0], 0)), rng)
    proj = rng @ rng.T
    # constraint: P M P = M for M = smat(w c)
    cons = []
    for col in w.T:
        mm = smat(col, k)
        cons.append(svec(proj @ mm @ proj - mm))
    cons = np.array(cons).T
    if np.abs(cons).max() < 1e-12:
        coeff = np.eye(w.shape[1])
    else:
        coeff = null_space(cons, rcond=1e-8)
    if coeff.shape[1] == 0:
        return _State(np.zeros((w.shape[0], 0)), rng)
    return _State(orth(w @ coeff), rng)


def _intersect(a, b):
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros((a.shape[0], 0))
    ns = null_space(np.hstack([a, -b]), rcond=1e-7)
    if ns.shape[1] == 0:
        return np.zeros((a.shape[0], 0))
    return orth(a @ ns[: a.shape[1]])


def _central_vector(state, cone, maps):
    """A deterministic element of the (restricted) cone."""
    basis = state.basis
    if basis.shape[1] == 1:
        v = basis[:, 0]
        return v if _inside(v, cone) else -v
    if cone.kind == "psd":
        return _psd_center(state, cone, maps)
    # polyhedral: maximise the minimal slack on the non-implicit constraints
    g = cone.halfspaces @ basis
    k = basis.shape[1]
    keep = np.linalg.norm(g, axis=1) > 1e-9
    g = g[keep]
    c = np.concatenate([np.zeros(k), [-1.0]])
    a_ub = np.hstack([-g, np.ones((g.shape[0], 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(g.shape[0]),
                  A_eq=np.concatenate([g.sum(axis=0), [0.0]])[None, :], b_eq=[1.0],
                  bounds=[(None, None)] * k + [(None, None)], method="highs")
    if res.status != 0:
        raise NoConeEigenvector("could not locate a cone point in the eigenspace")
    return basis @ res.x[:k]


def _inside(v, cone):
    return cone.contains(cone.unflatten(v) if cone.kind == "psd" else v, 1e-7)


def _psd_center(state, cone, maps, rounds=64):
    """Fixed PSD element of full admissible range via Cesaro averaging."""
    k = cone.size
    rng = state.rng
    m0 = rng @ rng.T
    for mp in maps:
        rho, _ = spectral_radius(mp)
        b = mp.congruence_array.T / np.sqrt(rho) if rho > 0 else mp.congruence_array.T
        acc = np.zeros((k, k))
        cur = m0
        for _ in range(rounds):
            acc += cur
            cur = b @ cur @ b.T
        m0 = acc / rounds
    v = state.basis @ (state.basis.T @ svec(m0))
    return v


def _extreme_rays(state, cone):
    """Rays spanning the final common eigencone (dimension > 1 case)."""
    basis = state.basis
    k = basis.shape[1]
    if cone.kind == "psd":
        rng = state.rng
        cands = [rng[:, i] for i in range(rng.shape[1])]
        cands += [rng[:, i] + rng[:, j] for i, j in combinations(range(rng.shape[1]), 2)]
        rays = []
        for w in cands:
            v = svec(np.outer(w, w))
            if np.linalg.norm(v - basis @ (basis.T @ v)) < 1e-8 * np.linalg.norm(v):
                if np.linalg.matrix_rank(np.array(rays + [v]), tol=1e-8) > len(rays):
                    rays.append(v)
        if not rays:
            rays = [_psd_center(state, cone, [])]
        return rays
    g = cone.halfspaces @ basis
    g = g[np.linalg.norm(g, axis=1) > 1e-9]
    rays = []
    for rows in combinations(range(g.shape[0]), k - 1):
        sub = g[list(rows)]
        if np.linalg.matrix_rank(sub, tol=1e-9) != k - 1:
            continue
        c = null_space(sub, rcond=1e-9)[:, 0]
        for sgn in (1.0, -1.0):
            if (g @ (sgn * c) >= -1e-9).all():
                v = basis @ (sgn * c)
                v = v / np.abs(v).max()
                if not any(np.linalg.norm(v - r) < 1e-7 for r in rays):
                    rays.append(v)
    return rays


# ---------------------------------------------------------------------------
# common eigenvectors


def common_eigenvectors(family, cone, tol=DEFAULT_TOL, word_bound=2):
    """Mutually noncollinear common cone eigenvectors and their characters.

    For every group word phi with exponents bounded by ``word_bound`` the
    restriction chain phi, psi_1, ..., psi_m is run; each chain ends in a
    cone on which every generator acts by a scalar.  Inverse words are only
    used when every generator is invertible with an inverse that still
    preserves the cone.  Results are ordered by character values,
    descending.
    """
    if not isinstance(family, CommutingFamily):
        family = CommutingFamily.of(family, tol=tol)
    for m in family.maps:
        if not preserves(m, cone, max(tol, 1e-9)):
            raise ConeNotPreserved(f"{m.label} does not preserve the cone")
    use_inverse = all(m.is_invertible() for m in family.maps) and all(
        preserves(m.inverse(), cone, 1e-9) for m in family.maps)
    rng = range(-word_bound, word_bound + 1) if use_inverse else range(0, word_bound + 1)
    words = sorted(product(rng, repeat=len(family)), key=lambda e: (sum(map(abs, e)), e))
    found = []
    for e in words:
        phi = family.word(e)
        try:
            state = _initial_state(cone)
            for m in (phi,) + family.maps:
                state, _ = _restrict(state, m, cone, tol)
        except NoConeEigenvector:
            continue
        if state.basis.shape[1] == 1:
            cands = [_central_vector(state, cone, family.maps)]
        else:
            cands = _extreme_rays(state, cone)
        for v in cands:
            v = _normalize(v, cone)
            if not any(_collinear(v, u) for u in found):
                found.append(v)
        if len(found) >= cone.ambient_dim:
            break
    chars = []
    for v in found:
        vals = tuple(_rayleigh(m, v) for m in family.maps)
        chars.append(Character(vals, cone.unflatten(v), family.labels))
    chars.sort(key=lambda c: tuple(-x for x in c.values))
    for c in chars:
        _check_eigen(c, family, cone)
    return chars


def _collinear(u, v, tol=1e-7):
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    return abs(abs(u @ v) - nu * nv) <= tol * nu * nv


def _rayleigh(m, v):
    return float(v @ m.apply(v) / (v @ v))


def _check_eigen(ch, family, cone, tol=1e-8):
    v = cone.flatten(ch.eigenvector)
    for m, val in zip(family.maps, ch.values):
        err = np.linalg.norm(m.apply(v) - val * v)
        if err > tol * max(np.linalg.norm(m.array), 1.0) * np.linalg.norm(v):
            raise NoConeEigenvector(f"eigen-consistency failed for {m.label}: residual {err:.3e}")


def eigen_residual(ch, family, cone):
    """max_j |phi_j(v) - chi(phi_j) v| / |v|."""
    v = cone.flatten(ch.eigenvector)
    return max(np.linalg.norm(m.apply(v) - val * v) / np.linalg.norm(v)
               for m, val in zip(family.maps, ch.values))


def character_structure_report(chars, family=None, tol=DEFAULT_TOL, rho_rtol=1e-6):
    """Evaluate the distinctness/noncollinearity/independence equivalence.

    With ``family`` given, also locate, for every generator, a character
    that attains its spectral radius (``"MISSING"`` if none does).
    """
    vals = np.array([c.values for c in chars], dtype=float)
    vecs = [np.asarray(c.eigenvector, dtype=float).reshape(-1) for c in chars]
    m = len(chars)
    distinct = all(
        np.abs(vals[i] - vals[j]).max() > tol * max(np.abs(vals[i]).max(), np.abs(vals[j]).max(), 1.0)
        for i, j in combinations(range(m), 2))
    noncollinear = all(not _collinear(vecs[i], vecs[j], 1e-9) for i, j in combinations(range(m), 2))
    if m:
        mat = np.array([v / np.linalg.norm(v) for v in vecs])
        sv = np.linalg.svd(mat, compute_uv=False)
        independent = bool(sv.min() > 1e-8 * sv.max())
    else:
        independent = True
    report = {
        "count": m,
        "distinct": bool(distinct),
        "noncollinear": bool(noncollinear),
        "independent": independent,
    }
    report["consistent"] = report["distinct"] == report["noncollinear"] == report["independent"]
    if family is not None:
        achievers, radii = {}, {}
        for j, mp in enumerate(family.maps):
            rho, _ = spectral_radius(mp)
            radii[family.labels[j]] = rho
            hit = [i for i in range(m) if abs(vals[i, j] - rho) <= rho_rtol * max(rho, 1e-300)]
            achievers[family.labels[j]] = hit[0] if hit else "MISSING"
        report["spectral_radii"] = radii
        report["achievers"] = achievers
    return report
