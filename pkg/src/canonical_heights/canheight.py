"""Canonical heights attached to a maximal-rank abelian group action.

Two kinds of system are supported:

* ``AbelianSystem``: E^n with a commuting family of integer matrices.  The
  eigendivisors are D_i = v_i v_i^T and hhat_{D_i,g_i}(P) = v_i^T G(P) v_i
  where G(P) is the Neron-Tate Gram matrix of the tuple P.
* ``WehlerSystem``: a Wehler K3 surface with G = <phi>.  The two canonical
  heights are telescoping limits of h_{D+}(phi^m x) / lam^m and
  h_{D-}(phi^-m x) / lam^m with exact orbits.

Every estimate carries an empirical tail bound.
"""

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import elliptic as ec
from . import exact, wehler
from .character_lattice import LogCharacterMatrix, find_distinguished
from .errors import ConfigError, ExcludedPoint, Inconclusive
from .ns_abelian import AutoAction, eigendivisor_system

SAFETY = 2.0
PERIODIC_ALL = "PERIODIC_ALL"
NONPERIODIC = "NONPERIODIC"


@dataclass(frozen=True)
class HeightValue:
    value: float
    tail: float
    m_used: int = 0
    stopped: str = ""

    @property
    def is_zero(self):
        """Zero-clamping rule: within the tail of 0."""
        return abs(self.value) <= self.tail


@dataclass(frozen=True)
class CanonicalHeightEstimate:
    value: float
    tail: float
    m_used: int
    per_index: tuple
    h_D: float = float("nan")

    @property
    def defect(self):
        return self.value - self.h_D

    def to_json(self):
        return {"value": self.value, "tail": self.tail, "m_used": self.m_used,
                "per_index": [{"value": h.value, "tail": h.tail, "m_used": h.m_used} for h in self.per_index],
                "h_D": self.h_D, "defect": self.defect}


# ---------------------------------------------------------------------------
# abelian kind


class AbelianSystem:
    kind = "abelian"

    def __init__(self, curve, generators, labels, iters=8, digit_budget=ec.DIGIT_BUDGET,
                 name="abelian", meta=None, word_bound=3):
        self.curve = curve
        self.labels = tuple(labels)
        self.actions = [AutoAction(g, lab) for g, lab in zip(generators, labels)]
        self.n = self.actions[0].n
        self.iters = iters
        self.digit_budget = digit_budget
        self.name = name
        self.meta = meta or {}
        self.eds = eigendivisor_system(self.actions)
        self.characters = self.eds.characters
        self.log_chars = LogCharacterMatrix.from_characters(self.characters)
        self.words = tuple(find_distinguished(self.log_chars, i, word_bound) for i in range(self.n))
        self._height_cache = {}

    # -- group ----------------------------------------------------------------

    def word_matrix(self, word):
        m = exact.identity(self.n)
        for act, e in zip(self.actions, word):
            if e:
                m = exact.matmul(exact.matpow(act.A, e), m)
        return m

    def lam1(self, word):
        return float(self.characters.on_word(word).max())

    def chi(self, word):
        return self.characters.on_word(word)

    def apply(self, word, x, power=1):
        m = exact.matpow(self.word_matrix(word), power)
        return ec.act(self.curve, m, x)

    def is_periodic_word(self, word, x, period_bound):
        """Exact orbit recurrence of x under the word, up to period_bound steps."""
        m = self.word_matrix(word)
        q = list(x)
        for k in range(1, period_bound + 1):
            q = ec.act(self.curve, m, q)
            if q == list(x):
                return k
            if not all(ec.is_torsion(self.curve, p) for p in q):
                # non-torsion coordinates never return: word - id is injective up to torsion
                return None
        return None

    # -- heights --------------------------------------------------------------

    def gram(self, x):
        return ec.pairing_gram(self.curve, list(x), self.iters, self.digit_budget, self._height_cache)

    def naive_gram(self, x):
        """Polarized naive heights; a Weil-height stand-in for the pairing."""
        def h(p):
            return 0.0 if p.is_infinity else ec.naive_height(p)
        n = len(x)
        g = np.zeros((n, n))
        for a in range(n):
            g[a, a] = h(x[a])
            for b in range(a + 1, n):
                g[a, b] = g[b, a] = (h(ec.add(self.curve, x[a], x[b])) - h(x[a]) - h(x[b])) / 2
        return g

    def telescoping_height(self, i, x, m_max=None, gram=None):
        gram = gram or self.gram(x)
        v = self.eds.eigenvectors[i]
        value = float(v @ gram.G @ v)
        tail = float((np.abs(v)[:, None] * np.abs(v)[None, :] * gram.tail).sum())
        return HeightValue(value, tail, self.iters)

    def canonical_height_G(self, x, m_max=None):
        gram = self.gram(x)
        per = tuple(self.telescoping_height(i, x, gram=gram) for i in range(self.n))
        h_d = float(np.trace(self.eds.D @ self.naive_gram(x)))
        return CanonicalHeightEstimate(sum(h.value for h in per), sum(h.tail for h in per),
                                       self.iters, per, h_d)

    def ample_heights(self, word, x, m_max):
        """h_I(g^m x) = tr(W^m G W^mT) for m = 0..m_max, W the word matrix."""
        gram = self.gram(x)
        w = self.word_matrix(word)
        out, tails = [], []
        p = exact.identity(self.n)
        for _ in range(m_max + 1):
            pf = np.array([[float(c) for c in row] for row in p])
            gm = pf @ gram.G @ pf.T
            out.append(float(np.trace(gm)))
            tails.append(float((np.abs(pf) @ gram.tail @ np.abs(pf).T).trace()))
            p = exact.matmul(w, p)
        return np.array(out), np.array(tails)

    def all_torsion(self, x):
        return all(ec.is_torsion(self.curve, p) for p in x)

    def periodic_evidence(self, x, period_bound):
        """(periodic under every generator/distinguished word, under some)."""
        torsion = self.all_torsion(x)
        if not torsion:
            return False, False, {"torsion": False}
        words = [tuple(int(k == j) for k in range(len(self.labels))) for j in range(len(self.labels))]
        words += list(self.words)
        periods = [self.is_periodic_word(w, x, period_bound) for w in words]
        return all(p is not None for p in periods), any(p is not None for p in periods), \
            {"torsion": True, "periods": periods}


# ---------------------------------------------------------------------------
# Wehler kind


class WehlerSystem:
    kind = "wehler"

    def __init__(self, surface, m_max=5, digit_budget=wehler.DIGIT_BUDGET, name="wehler", meta=None):
        self.surface = surface
        self.m_max = m_max
        self.digit_budget = digit_budget
        self.name = name
        self.meta = meta or {}
        self.k3 = wehler.eigendivisors_k3()
        self.lam = self.k3.lam
        self.labels = ("phi",)
        self.n = 2
        self.words = ((1,), (-1,))
        self.log_chars = LogCharacterMatrix(np.array([[math.log(self.lam)], [-math.log(self.lam)]]), self.labels)
        self._orbit_cache = {}

    def chi(self, word):
        return np.array([self.lam ** word[0], self.lam ** (-word[0])])

    def lam1(self, word):
        return self.lam ** abs(word[0])

    def classes(self):
        return (self.k3.d_plus, self.k3.d_minus)

    def apply(self, word, x, power=1):
        return wehler.apply_word(self.surface, x, word[0] * power)

    def orbit(self, x, inverse, steps):
        key = (x.x, x.y, inverse)
        cached = self._orbit_cache.get(key)
        if cached is not None:
            if cached.m_reached >= steps:
                return wehler.Orbit(cached.points[:steps + 1], "")
            if cached.stopped:
                return cached
        orb = wehler.orbit(self.surface, x, steps, inverse=inverse, digit_budget=self.digit_budget)
        self._orbit_cache[key] = orb
        return orb

    def telescoping_height(self, i, x, m_max=None):
        m_max = self.m_max if m_max is None else m_max
        orb = self.orbit(x, inverse=(i == 1), steps=m_max)
        if orb.stopped == "indeterminate" and orb.m_reached < m_max:
            raise ExcludedPoint("orbit meets an indeterminate fiber")
        d = self.classes()[i]
        hs = [wehler.height(self.surface, q, d) for q in orb.points]
        m = len(hs) - 1
        if m == 0:
            return HeightValue(hs[0], float("inf"), 0, orb.stopped)
        defects = [abs(hs[k + 1] - self.lam * hs[k]) for k in range(m)]
        c = max(defects)
        tail = SAFETY * c / (self.lam ** m * (self.lam - 1))
        return HeightValue(hs[-1] / self.lam ** m, tail, m, orb.stopped)

    def canonical_height_G(self, x, m_max=None):
        per = tuple(self.telescoping_height(i, x, m_max) for i in range(2))
        dsum = tuple(a + b for a, b in zip(*self.classes()))
        h_d = wehler.height(self.surface, x, dsum)
        return CanonicalHeightEstimate(sum(h.value for h in per), sum(h.tail for h in per),
                                       min(h.m_used for h in per), per, h_d)

    def ample_heights(self, word, x, m_max):
        orb = self.orbit(x, inverse=word[0] < 0, steps=m_max * abs(word[0]))
        pts = orb.points[::abs(word[0])] if word[0] else [x]
        hs = np.array([wehler.height(self.surface, q, (1, 1)) for q in pts])
        return hs, np.zeros_like(hs)

    def period(self, x, period_bound):
        """Smallest k <= period_bound with phi^k(x) = x along the cached orbit."""
        orb = self.orbit(x, inverse=False, steps=period_bound)
        for k, q in enumerate(orb.points[1:], 1):
            if q == x:
                return k
        return None

    def periodic_evidence(self, x, period_bound):
        k = self.period(x, period_bound)
        return k is not None, k is not None, {"period": k}


# ---------------------------------------------------------------------------
# operations


def telescoping_height(sys, i, x, m_max=None):
    return sys.telescoping_height(i, x, m_max)


def canonical_height_G(sys, x, m_max=None):
    return sys.canonical_height_G(x, m_max)


def product_height(sys, x, est=None):
    """prod_i hhat_{D_i,g_i}(x), factors within their tail of 0 clamped to 0."""
    est = est or sys.canonical_height_G(x)
    out = 1.0
    for h in est.per_index:
        out *= 0.0 if h.is_zero else max(h.value, 0.0)
    return out


@dataclass
class ZeroLocusReport:
    classification: str
    conditions: dict
    evidence: dict = field(default_factory=dict)

    def to_json(self):
        return {"classification": self.classification, "conditions": self.conditions,
                "evidence": self.evidence}


def classify_zero_locus(sys, x, period_bound=12):
    """Evaluate the five equivalent zero-locus conditions independently.

    (i) hhat_G = 0, (ii) every hhat_{D_i,g_i} = 0, (iii) periodic under every
    group element tested, (iv) periodic under some non-identity element,
    (v) some hhat_{D_i,g_i} = 0.
    """
    est = sys.canonical_height_G(x)
    zeros = [h.is_zero for h in est.per_index]
    all_p, some_p, ev = sys.periodic_evidence(x, period_bound)
    cond = {
        "i_hhat_G_zero": abs(est.value) <= est.tail,
        "ii_all_per_index_zero": all(zeros),
        "iii_periodic_all": all_p,
        "iv_periodic_some": some_p,
        "v_some_per_index_zero": any(zeros),
    }
    ev.update({"hhat_G": est.value, "tail": est.tail,
               "per_index": [(h.value, h.tail) for h in est.per_index]})
    vals = set(cond.values())
    if len(vals) != 1:
        straddle = any(abs(h.value) <= 2 * h.tail for h in est.per_index)
        reason = "tails straddle 0" if straddle else "conditions disagree"
        err = Inconclusive(f"{reason}: {cond}")
        err.report = ZeroLocusReport("INCONCLUSIVE", cond, ev)
        raise err
    return ZeroLocusReport(PERIODIC_ALL if vals.pop() else NONPERIODIC, cond, ev)


def _slope_fit(ms, logs):
    a = np.vstack([ms, np.ones_like(ms)]).T
    coef, *_ = np.linalg.lstsq(a, logs, rcond=None)
    return float(coef[0])


def arithmetic_degree(sys, word, x, m_budget=None, period_bound=12):
    """lim h+(g^m x)^(1/m) with h+ = max(h_H, 1) for an ample H.

    Abelian kind: exact Gram transforms up to m_budget (default 200); the
    rate is exp of the fitted slope of log h+ over the second half.
    Wehler kind: 1 when the orbit recurs, otherwise a fit of
    h(g^m x) ~ a lam^m + b lam^-m + c over the exact orbit (m <= 5).
    """
    if sys.kind == "abelian":
        m_budget = 200 if m_budget is None else m_budget
        hs, _ = sys.ample_heights(word, x, m_budget)
        hp = np.maximum(hs, 1.0)
        ms = np.arange(len(hp), dtype=float)
        half = len(hp) // 2
        return math.exp(_slope_fit(ms[half:], np.log(hp[half:])))
    m_budget = sys.m_max if m_budget is None else m_budget
    if sys.period(x, period_bound) is not None:
        return 1.0
    hs, _ = sys.ample_heights(word, x, m_budget)
    hp = np.maximum(hs, 1.0)
    if len(hp) < 3:
        return float("nan")
    return _fit_growth(hp)


def _fit_growth(hs):
    ms = np.arange(len(hs), dtype=float)
    scale = hs.max()

    def resid(loglam):
        lam = math.exp(loglam)
        a = np.vstack([lam ** ms, lam ** -ms, np.ones_like(ms)]).T / scale
        coef, *_ = np.linalg.lstsq(a, hs / scale, rcond=None)
        return float(np.sum((a @ coef - hs / scale) ** 2))

    res = minimize_scalar(resid, bounds=(1e-3, math.log(1e3)), method="bounded",
                          options={"xatol": 1e-10})
    return math.exp(res.x)


@dataclass
class CountingTable:
    rows: list
    divergent: bool
    limit: float

    @property
    def final_ratio(self):
        return self.rows[-1][2] if self.rows else float("nan")

    def to_csv_rows(self):
        return [("T", "N", "N_over_logT")] + [tuple(r) for r in self.rows]


def counting_function(sys, word, x, T_grid="auto", m_max=None, period_bound=12):
    """N(T) = #{m >= 0 : h_H(g^m x) <= T} over the computed heights."""
    if m_max is None:
        m_max = 200 if sys.kind == "abelian" else sys.m_max
    all_p, some_p, _ = sys.periodic_evidence(x, period_bound)
    lam = sys.lam1(word)
    limit = 1 / math.log(lam)
    hs, _ = sys.ample_heights(word, x, m_max)
    if some_p:
        return CountingTable([], True, limit)
    if isinstance(T_grid, str):
        srt = np.sort(hs)
        T_grid = [math.sqrt(a * b) for a, b in zip(srt[:-1], srt[1:]) if a > 0 and b > 1 and a != b]
    rows = []
    for t in T_grid:
        if t <= 1:
            continue
        n = int(np.sum(hs <= t))
        rows.append((float(t), n, n / math.log(t)))
    return CountingTable(rows, False, limit)


def scatter_data(sys, points):
    """(hhat_G, Hhat_G) pairs: the data hook for the open lower-bound question."""
    out = []
    for x in points:
        est = sys.canonical_height_G(x)
        out.append((est.value, product_height(sys, x, est), est.tail))
    return out


# ---------------------------------------------------------------------------
# loading


BUILTIN = {"e3": "e3.json", "wehler": "wehler.json"}


def read_json(path):
    if str(path) in BUILTIN:
        text = resources.files("canonical_heights").joinpath("fixtures", BUILTIN[str(path)]).read_text()
    else:
        p = Path(path)
        if not p.exists():
            raise ConfigError("system", f"file {path} not found")
        text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("system", f"invalid JSON: {exc}") from exc


def load_system(path_or_obj):
    obj = path_or_obj if isinstance(path_or_obj, dict) else read_json(path_or_obj)
    kind = obj.get("kind")
    if kind == "abelian":
        for key in ("curve", "generators"):
            if key not in obj:
                raise ConfigError(key, "missing")
        gens = obj["generators"]
        if not isinstance(gens, dict) or not gens:
            raise ConfigError("generators", "expected a non-empty mapping label -> matrix")
        try:
            curve = ec.CurveQ.from_json(obj["curve"])
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError("curve", str(exc)) from exc
        labels = list(gens)
        mats = []
        for lab in labels:
            try:
                mats.append(exact.parse_matrix(gens[lab]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"generators.{lab}", str(exc)) from exc
        return AbelianSystem(curve, mats, labels, iters=int(obj.get("iters", 8)),
                             name=obj.get("name", "abelian"), meta=obj)
    if kind == "wehler":
        for key in ("L", "Q"):
            if key not in obj:
                raise ConfigError(key, "missing")
        try:
            surface = wehler.WehlerSurface.from_json(obj)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError("Q", str(exc)) from exc
        return WehlerSystem(surface, m_max=int(obj.get("m_max", 5)), name=obj.get("name", "wehler"), meta=obj)
    raise ConfigError("kind", f"unknown system kind {kind!r}")


def sample_tuples(sys, count, mode, seed=0):
    """Deterministic E^n tuples: ``torsion`` (all coordinates torsion) or
    ``mixed`` (some torsion, some not)."""
    rng = np.random.default_rng(seed)
    meta = sys.meta
    tors = [ec.point_from_json(p) for p in meta.get("torsion_points", [])] + [ec.O]
    gens = [ec.point_from_json(p) for p in meta.get("nontorsion_points", [])]
    seen, out = set(), []
    tries = 0
    while len(out) < count and tries < 100 * count:
        tries += 1
        if mode == "torsion":
            tup = [tors[rng.integers(len(tors))] for _ in range(sys.n)]
        else:
            k = int(rng.integers(1, sys.n)) if mode == "mixed" else sys.n
            slots = set(rng.choice(sys.n, size=k, replace=False).tolist())
            tup = []
            for a in range(sys.n):
                t = tors[rng.integers(len(tors))]
                if a in slots:
                    c = int(rng.choice([-2, -1, 1, 2]))
                    g = gens[rng.integers(len(gens))]
                    tup.append(ec.add(sys.curve, ec.mul(sys.curve, c, g), t))
                else:
                    tup.append(t)
        key = tuple((p.x, p.y) for p in tup)
        if key in seen:
            continue
        seen.add(key)
        out.append(tup)
    return out
