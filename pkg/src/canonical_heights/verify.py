"""Invariant suites behind the ``verify`` and ``verify-ns`` subcommands.

Each check returns ``{"name", "passed", "detail"}``; the suites never raise
on a failed invariant, only on malformed input.
"""

import math
from fractions import Fraction
from itertools import product

import numpy as np

from . import canheight as ch
from . import exact, wehler
from .character_lattice import lattice_certificate, words
from .errors import CanonicalHeightError
from .ns_abelian import (dynamical_degree_profile, intersection_number, is_weakly_numerically_trivial,
                         mixed_discriminant, mixed_discriminant_polarization, pullback)


def _check(name, passed, **detail):
    return {"name": name, "passed": bool(passed), "detail": detail}


def _guard(name, fn):
    try:
        return fn()
    except CanonicalHeightError as exc:
        return _check(name, False, error=exc.code, message=str(exc))


def run_suite(sys_):
    if sys_.kind == "abelian":
        return _abelian_suite(sys_)
    return _wehler_suite(sys_)


def _abelian_suite(sys_):
    out = []
    eds = sys_.eds
    vals = np.array(eds.characters.values, dtype=float)
    out.append(_check("characters_count", eds.certificates["count"] == sys_.n and eds.certificates["distinct"],
                      count=eds.certificates["count"]))
    worst = 0.0
    for w in words(len(sys_.labels), 3):
        worst = max(worst, abs(float(np.prod(sys_.chi(w))) - 1.0))
    out.append(_check("character_product_one", worst <= 1e-9, max_error=worst))
    cert = lattice_certificate(sys_.log_chars, 3, distinguished=sys_.words)
    out.append(_check("dominance", cert["dominance_ok"], certificate=cert["dominance"]))
    bad = []
    for i, w in enumerate(sys_.words):
        c = sys_.chi(w)
        if not (all(c[k] < 1 for k in range(sys_.n) if k != i) and abs(c[i] - sys_.lam1(w)) <= 1e-9 * c[i]):
            bad.append(i)
    out.append(_check("distinguished_words", not bad, words=sys_.words, failing=bad))
    cert = eds.certificates
    out.append(_check("nef_and_big", cert["intersection_positive"] and cert["D_positive_definite"]
                      and abs(cert["intersection"] - cert["det_V_squared"]) <= 1e-9,
                      intersection=cert["intersection"], det_V_squared=cert["det_V_squared"],
                      D_min_eigenvalue=cert["D_min_eigenvalue"]))
    tuples = ch.sample_tuples(sys_, 5, "mixed") + ch.sample_tuples(sys_, 3, "torsion")
    worst = 0.0
    for x in tuples:
        g = sys_.gram(x)
        for j, act in enumerate(sys_.actions):
            a = act.array()
            moved = a @ g.G @ a.T
            for i, v in enumerate(eds.eigenvectors):
                lhs = float(v @ moved @ v)
                rhs = float(vals[i, j]) * float(v @ g.G @ v)
                worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300) if rhs else abs(lhs))
    out.append(_check("functional_equation", worst <= 1e-6, max_relative_error=worst))
    disagree = []
    for x in tuples:
        try:
            rep = ch.classify_zero_locus(sys_, x)
            expect = ch.PERIODIC_ALL if sys_.all_torsion(x) else ch.NONPERIODIC
            if rep.classification != expect:
                disagree.append([p.to_json() for p in x])
        except CanonicalHeightError:
            disagree.append([p.to_json() for p in x])
    out.append(_check("zero_locus", not disagree, disagreements=disagree))
    return out


def _wehler_suite(sys_):
    out = []
    S = sys_.surface
    pts = [wehler.SurfacePoint.from_json(p) for p in sys_.meta.get("base_points", [])]
    if not pts:
        pts = wehler.enumerate_points(S, math.log(2))
    out.append(_check("points_on_surface", all(wehler.contains(S, p) for p in pts), count=len(pts)))
    bad = 0
    for p in pts:
        for which in (1, 2):
            try:
                if wehler.sigma(S, wehler.sigma(S, p, which), which) != p:
                    bad += 1
            except CanonicalHeightError:
                bad += 1
    out.append(_check("involutions", bad == 0, failures=bad))
    iso = all(wehler.is_isometry(m) for m in (wehler.SIGMA1_STAR, wehler.SIGMA2_STAR, wehler.phi_star()))
    out.append(_check("ns_isometries", iso))
    closed = 7 + 4 * math.sqrt(3)
    out.append(_check("lambda_closed_form", abs(sys_.lam - closed) <= 1e-12, lam=sys_.lam, closed_form=closed))

    def stability():
        worst = 0.0
        for p in pts:
            for i in range(2):
                h4 = sys_.telescoping_height(i, p, m_max=4)
                h5 = sys_.telescoping_height(i, p, m_max=5)
                worst = max(worst, abs(h5.value - h4.value) - h4.tail)
        return _check("telescoping_stable", worst <= 0, worst_excess=worst)
    out.append(_guard("telescoping_stable", stability))

    def periodic():
        pp = sys_.meta.get("periodic_point")
        if pp is None:
            return _check("periodic_point", True, skipped="no periodic point recorded")
        rep = ch.classify_zero_locus(sys_, wehler.SurfacePoint.from_json(pp))
        return _check("periodic_point", rep.classification == ch.PERIODIC_ALL, report=rep.to_json())
    out.append(_guard("periodic_point", periodic))
    return out


def run_ns_suite(sys_):
    """Intersection-theory checks on the NS model of an abelian system."""
    if sys_.kind != "abelian":
        from .errors import ConfigError
        raise ConfigError("system", "verify-ns needs an abelian system")
    out = []
    n = sys_.n
    eye = exact.identity(n)
    out.append(_check("identity_self_intersection", intersection_number(*([eye] * n)) == math.factorial(n)))
    rng = np.random.default_rng(0)
    worst = Fraction(0)
    for _ in range(20):
        mats = []
        for _ in range(n):
            m = [[Fraction(0)] * n for _ in range(n)]
            for a, b in product(range(n), repeat=2):
                if a <= b:
                    m[a][b] = m[b][a] = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 5)))
            mats.append(m)
        worst = max(worst, abs(mixed_discriminant(*mats) - mixed_discriminant_polarization(*mats)))
    out.append(_check("polarization_agrees", worst == 0, max_difference=str(worst)))
    # pullback by an automorphism of determinant +-1 preserves intersections
    h = [eye] * n
    worst = 0
    for act in sys_.actions:
        moved = [pullback(act.A, m) for m in h]
        worst = max(worst, abs(intersection_number(*moved) - intersection_number(*h)))
    out.append(_check("pullback_invariance", worst == 0, max_difference=str(worst)))
    zero = [[Fraction(0)] * n for _ in range(n)]
    out.append(_check("zero_class_trivial", is_weakly_numerically_trivial([zero])))
    out.append(_check("ample_class_nontrivial", not is_weakly_numerically_trivial([eye])))
    for act in sys_.actions:
        prof = dynamical_degree_profile(act, m_max=16)
        err = max(abs(a - b) / max(a, 1.0) for a, b in zip(prof["spectral"], prof["limit"]))
        out.append(_check(f"dynamical_degrees_{act.label}", err <= 1e-6, spectral=prof["spectral"],
                          limit=prof["limit"]))
    return out
