"""Command line entry point.

Every run writes into ``--out`` (default ``runs/<command>``): a
``manifest.json`` with version, height convention, budgets and seed, a
``result.json`` record, and CSV tables where the command produces one.
JSON is written with sorted keys and no timestamps so identical inputs give
byte-identical outputs.
"""

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import HEIGHT_CONVENTION, __version__
from . import canheight as ch
from . import elliptic as ec
from . import exact, wehler
from .character_lattice import bounded_spectral_radii, find_distinguished, lattice_certificate, subgroup_rank
from .cone_engine import character_structure_report
from .errors import CanonicalHeightError, ConfigError


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return exact.format_rational(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if hasattr(obj, "to_json"):
        return _jsonable(obj.to_json())
    if type(obj).__name__ == "mpz":
        return str(int(obj))
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n"


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


# ---------------------------------------------------------------------------
# argument parsing helpers


def _positive(name, value):
    if value is None:
        return None
    if value <= 0:
        raise ConfigError(name, "must be positive")
    return value


def _word(sys_, text):
    """'A', 'A*B^-1', '1,-1' or '(1,-1)' -> exponent tuple."""
    labels = sys_.labels
    text = text.strip().strip("()")
    if not text:
        raise ConfigError("g", "empty word")
    if all(c in "-0123456789, " for c in text):
        vals = tuple(int(t) for t in text.split(",") if t.strip())
        if len(vals) != len(labels):
            raise ConfigError("g", f"expected {len(labels)} exponents")
        return vals
    exps = [0] * len(labels)
    for part in text.split("*"):
        name, _, pw = part.strip().partition("^")
        if name not in labels:
            raise ConfigError("g", f"unknown generator {name!r}")
        exps[labels.index(name)] += int(pw) if pw else 1
    return tuple(exps)


def _load_point(sys_, arg):
    """A point as inline JSON or a JSON file path."""
    if arg is None:
        raise ConfigError("point", "missing")
    p = Path(arg)
    try:
        obj = json.loads(p.read_text()) if p.exists() else json.loads(arg)
    except json.JSONDecodeError as exc:
        raise ConfigError("point", f"not valid JSON: {exc}") from exc
    try:
        if sys_.kind == "abelian":
            if isinstance(obj, dict):
                obj = obj.get("points", obj.get("point"))
            if not isinstance(obj, list) or len(obj) != sys_.n:
                raise ConfigError("point", f"expected a list of {sys_.n} curve points")
            pts = [ec.point_from_json(p) for p in obj]
            for p in pts:
                if not sys_.curve.contains(p):
                    raise ConfigError("point", f"{p.to_json()} is not on the curve")
            return pts
        pt = wehler.SurfacePoint.from_json(obj)
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise ConfigError("point", str(exc)) from exc
    if not wehler.contains(sys_.surface, pt):
        raise ConfigError("point", "not on the surface")
    return pt


def _default_point(sys_):
    if sys_.kind == "abelian":
        return [ec.point_from_json(p) for p in sys_.meta["counting_tuple"]]
    return wehler.SurfacePoint.from_json(sys_.meta["counting_point"])


# ---------------------------------------------------------------------------
# commands


def cmd_characters(sys_, args):
    if sys_.kind == "abelian":
        chars = sys_.characters.characters()
        from .cone_engine import CommutingFamily
        fam = CommutingFamily.of([a.cone_map() for a in sys_.actions], sys_.labels)
        rep = character_structure_report(chars, fam)
        return {"characters": sys_.characters, "report": rep,
                "certificates": sys_.eds.certificates}, None
    k3 = sys_.k3
    return {"characters": {"phi": [k3.lam, 1 / k3.lam]}, "D_plus": k3.d_plus, "D_minus": k3.d_minus,
            "certificates": k3.certificates}, None


def cmd_distinguished(sys_, args):
    bound = _positive("bound", args.bound)
    L = sys_.log_chars
    found = [find_distinguished(L, i, bound) for i in range(L.shape[0])]
    chars = [sys_.chi(w) for w in found]
    cert = lattice_certificate(L, bound, distinguished=found)
    cert["subgroup_ranks"] = subgroup_rank(L, found) if L.shape[0] > 2 else None
    return {"words": found, "characters": chars, "certificates": cert}, None


def _orbit_rows(sys_, x, steps):
    rows = [("m", "h", "hhat_plus", "hhat_minus", "tail")]
    word = sys_.words[0]
    cur = x
    recs = []
    for m in range(steps + 1):
        est = sys_.canonical_height_G(cur)
        if sys_.kind == "abelian":
            h = float(np.trace(sys_.gram(cur).G))
        else:
            h = wehler.height(sys_.surface, cur, (1, 1))
        hp, hm = est.per_index[0].value, est.per_index[-1].value
        rows.append((m, h, hp, hm, est.tail))
        recs.append({"m": m, "h": h, "estimate": est})
        if m < steps:
            cur = sys_.apply(word, cur)
    return recs, rows


def cmd_orbit(sys_, args):
    x = _load_point(sys_, args.point) if args.point else _default_point(sys_)
    steps = _positive("steps", args.steps)
    if sys_.kind == "wehler":
        orb = wehler.orbit(sys_.surface, x, steps, digit_budget=sys_.digit_budget)
        rows = [("m", "h", "hhat_plus", "hhat_minus", "tail")]
        recs = []
        for m, q in enumerate(orb.points):
            h = wehler.height(sys_.surface, q, (1, 1))
            hp = sys_.telescoping_height(0, q, m_max=max(sys_.m_max - m, 1))
            hm = sys_.telescoping_height(1, q, m_max=max(sys_.m_max - m, 1)) if m == 0 else None
            rows.append((m, h, hp.value, hm.value if hm else float("nan"), hp.tail))
            recs.append({"m": m, "digits": q.digits(), "h": h,
                         "point": q.to_json() if q.digits() < 200 else None})
        return {"m_reached": orb.m_reached, "stopped": orb.stopped, "orbit": recs}, rows
    recs, rows = _orbit_rows(sys_, x, steps)
    return {"orbit": recs}, rows


def cmd_height(sys_, args):
    if args.curve:
        obj = ch.read_json(args.curve)
        curve = ec.CurveQ.from_json(obj.get("curve", obj))
    elif sys_ is not None and sys_.kind == "abelian":
        curve = sys_.curve
    else:
        raise ConfigError("curve", "give --curve or an abelian --system")
    try:
        xs, ys = args.point_xy.split(",")
        p = curve.point(xs, ys)
    except (ValueError, AttributeError) as exc:
        raise ConfigError("point", f"expected 'x,y' on the curve: {exc}") from exc
    iters = _positive("iters", args.iters)
    est = ec.neron_tate(curve, p, iters)
    return {"point": p.to_json(), "naive_height": ec.naive_height(p), "value": est.value,
            "tail": est.tail, "iters": est.iters, "truncated": est.truncated,
            "torsion": ec.is_torsion(curve, p)}, None


def cmd_canheight(sys_, args):
    x = _load_point(sys_, args.point) if args.point else _default_point(sys_)
    est = sys_.canonical_height_G(x)
    return {"estimate": est, "product_height": ch.product_height(sys_, x, est),
            "product_height_tail": est.tail}, None


def cmd_classify(sys_, args):
    x = _load_point(sys_, args.point) if args.point else _default_point(sys_)
    try:
        rep = ch.classify_zero_locus(sys_, x, _positive("period_bound", args.period_bound))
    except CanonicalHeightError as exc:
        if getattr(exc, "report", None) is not None:
            return {"report": exc.report, "error": str(exc)}, None
        raise
    return {"report": rep}, None


def cmd_alpha(sys_, args):
    x = _load_point(sys_, args.point) if args.point else _default_point(sys_)
    g = _word(sys_, args.g) if args.g else sys_.words[0]
    a = ch.arithmetic_degree(sys_, g, x, args.m_budget)
    lam = sys_.lam1(g)
    return {"word": g, "alpha": a, "lambda1": lam, "relative_tolerance": 0.01 if sys_.kind == "abelian" else 0.1}, None


def cmd_counting(sys_, args):
    x = _load_point(sys_, args.point) if args.point else _default_point(sys_)
    g = _word(sys_, args.g) if args.g else sys_.words[0]
    grid = "auto"
    if args.Tmax not in (None, "auto"):
        tmax = float(args.Tmax)
        if tmax <= 1:
            raise ConfigError("Tmax", "must exceed 1")
        grid = list(np.geomspace(math.e, tmax, 50))
    table = ch.counting_function(sys_, g, x, grid, args.m_max)
    rec = {"word": g, "divergent": table.divergent, "limit": table.limit,
           "final_ratio": table.final_ratio if table.rows else None,
           "relative_error": (table.final_ratio / table.limit - 1) if table.rows else None}
    return rec, table.to_csv_rows()


def cmd_enumerate(sys_, args):
    _require(sys_, "wehler")
    pts = wehler.enumerate_points(sys_.surface, args.height_bound)
    return {"height_bound": args.height_bound, "count": len(pts), "points": pts}, None


def cmd_periodic(sys_, args):
    _require(sys_, "wehler")
    found = wehler.find_periodic(sys_.surface, args.height_bound, _positive("period_bound", args.period_bound),
                                 sys_.digit_budget)
    return {"periodic": [{"point": p, "period": k} for p, k in found]}, None


def cmd_scatter(sys_, args):
    if sys_.kind == "wehler":
        pts = [p for p in wehler.enumerate_points(sys_.surface, args.height_bound)]
    else:
        pts = ch.sample_tuples(sys_, 20, "mixed", seed=args.seed) + ch.sample_tuples(sys_, 5, "torsion", seed=args.seed)
    rows = [("hhat_G", "Hhat_G", "tail")]
    rows += [tuple(r) for r in ch.scatter_data(sys_, pts)]
    return {"count": len(pts)}, rows


def cmd_verify(sys_, args):
    from .verify import run_suite
    results = run_suite(sys_)
    ok = all(r["passed"] for r in results)
    return {"passed": ok, "checks": results}, None


def cmd_verify_ns(sys_, args):
    from .verify import run_ns_suite
    results = run_ns_suite(sys_)
    return {"passed": all(r["passed"] for r in results), "checks": results}, None


def cmd_radii(sys_, args):
    return {"degree": args.degree, "bound": args.bound_value,
            "radii": bounded_spectral_radii(args.degree, args.bound_value)}, None


def _require(sys_, kind):
    if sys_.kind != kind:
        raise ConfigError("system", f"this command needs a {kind} system")


COMMANDS = {
    "verify": cmd_verify, "verify-ns": cmd_verify_ns, "characters": cmd_characters,
    "distinguished": cmd_distinguished, "orbit": cmd_orbit, "height": cmd_height,
    "canheight": cmd_canheight, "classify": cmd_classify, "alpha": cmd_alpha,
    "counting": cmd_counting, "enumerate": cmd_enumerate, "periodic": cmd_periodic,
    "scatter": cmd_scatter, "radii": cmd_radii,
}
NO_SYSTEM = {"height", "radii"}


def build_parser():
    p = argparse.ArgumentParser(prog="canheights", description="canonical-height experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--system", default=None, help="fixture path or builtin name (e3, wehler)")
        sp.add_argument("--fixture", dest="system", help=argparse.SUPPRESS)
        sp.add_argument("--surface", dest="system", help=argparse.SUPPRESS)
        sp.add_argument("--out", default=None, help="run directory")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    add("verify", "run the invariant suite on a system")
    add("verify-ns", "run the Neron-Severi invariant suite on an abelian fixture")
    add("characters", "characters and eigendivisors")
    sp = add("distinguished", "distinguished group elements")
    sp.add_argument("--bound", type=int, default=3)
    sp = add("orbit", "orbit table")
    sp.add_argument("--point")
    sp.add_argument("--steps", type=int, default=5)
    sp = add("height", "Neron-Tate height of a curve point")
    sp.add_argument("--curve")
    sp.add_argument("--point", dest="point_xy", required=True, help="x,y as rationals")
    sp.add_argument("--iters", type=int, default=8)
    for name, help_ in (("canheight", "canonical height hhat_G"), ("classify", "zero-locus classification")):
        sp = add(name, help_)
        sp.add_argument("--point")
        sp.add_argument("--period-bound", dest="period_bound", type=int, default=12)
    sp = add("alpha", "arithmetic degree")
    sp.add_argument("--point")
    sp.add_argument("--g")
    sp.add_argument("--m-budget", dest="m_budget", type=int, default=None)
    sp = add("counting", "height counting function")
    sp.add_argument("--point")
    sp.add_argument("--g")
    sp.add_argument("--Tmax", default="auto")
    sp.add_argument("--m-max", dest="m_max", type=int, default=None)
    sp = add("enumerate", "points of bounded height")
    sp.add_argument("--height-bound", dest="height_bound", type=float, default=math.log(2))
    sp = add("periodic", "periodic points of bounded height")
    sp.add_argument("--height-bound", dest="height_bound", type=float, default=math.log(3))
    sp.add_argument("--period-bound", dest="period_bound", type=int, default=4)
    sp = add("scatter", "(hhat_G, Hhat_G) data over sample points")
    sp.add_argument("--height-bound", dest="height_bound", type=float, default=math.log(3))
    sp = add("radii", "bounded spectral radii of integer polynomials")
    sp.add_argument("--degree", type=int, default=2)
    sp.add_argument("--bound", dest="bound_value", type=float, default=2.0)
    return p


def manifest(args, sys_):
    budgets = {}
    if sys_ is not None:
        budgets["digit_budget"] = sys_.digit_budget
        if sys_.kind == "abelian":
            budgets["iters"] = sys_.iters
        else:
            budgets["m_max"] = sys_.m_max
    for key in ("bound", "steps", "iters", "m_budget", "m_max", "height_bound", "period_bound", "Tmax"):
        if getattr(args, key, None) is not None:
            budgets[key] = getattr(args, key)
    return {"tool": "canheights", "version": __version__, "command": args.command,
            "system": args.system, "height_convention": HEIGHT_CONVENTION,
            "budgets": budgets, "seed": args.seed}


def run(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Path(args.out) if args.out else Path("runs") / args.command
    try:
        sys_ = None
        if args.command not in NO_SYSTEM or args.system:
            if not args.system:
                raise ConfigError("system", "missing --system")
            sys_ = ch.load_system(args.system)
        record, table = COMMANDS[args.command](sys_, args)
    except ConfigError as exc:
        err = {"error": exc.code, "field": exc.field, "message": str(exc)}
        stdout.write(dumps(err))
        return 2
    except CanonicalHeightError as exc:
        err = {"error": exc.code, "message": str(exc)}
        stdout.write(dumps(err))
        return 1
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(dumps(manifest(args, sys_)))
    (out / "result.json").write_text(dumps(record))
    if table is not None:
        _write_csv(out / "table.csv", table)
    summary = {k: v for k, v in _jsonable(record).items() if not isinstance(v, (list, dict))}
    summary["out"] = str(out)
    stdout.write(dumps(summary))
    if args.command in ("verify", "verify-ns") and not record["passed"]:
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
