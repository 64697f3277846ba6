import math

import numpy as np
import pytest

from canonical_heights import canheight as ch
from canonical_heights import elliptic as ec
from canonical_heights import wehler
from canonical_heights.errors import ConfigError

LAM = 7 + 4 * math.sqrt(3)
DEFECT_BOUND = 0.5     # observed max |hhat_G - h_D| on the Wehler fixture is about 0.35


@pytest.fixture(scope="module")
def wpoints(wsys):
    return wehler.enumerate_points(wsys.surface, math.log(3))


def _q(e3):
    return ec.point_from_json(e3.meta["nontorsion_points"][0])


# -- abelian kind -------------------------------------------------------------


def test_torsion_tuple_zero(e3):
    x = ch.sample_tuples(e3, 1, "torsion", seed=1)[0]
    est = e3.canonical_height_G(x)
    assert abs(est.value) <= est.tail
    assert all(h.is_zero for h in est.per_index)


def test_single_coordinate_tuple(e3):
    """P = (Q, O, O): hhat_{D_i}(P) = v_i[0]^2 hhat(Q), reproducibly."""
    q = _q(e3)
    x = [q, ec.O, ec.O]
    hq = ec.neron_tate(e3.curve, q, e3.iters)
    est = e3.canonical_height_G(x)
    for h, v in zip(est.per_index, e3.eds.eigenvectors):
        assert h.value == pytest.approx(v[0] ** 2 * hq.value, rel=1e-12)
    assert e3.canonical_height_G(x).value == est.value


def test_estimate_sums(e3):
    x = ch.sample_tuples(e3, 1, "mixed", seed=2)[0]
    est = e3.canonical_height_G(x)
    assert est.value == pytest.approx(sum(h.value for h in est.per_index))
    assert est.tail == pytest.approx(sum(h.tail for h in est.per_index))
    assert est.to_json()["defect"] == pytest.approx(est.value - est.h_D)


def test_positivity_50_points(e3):
    for x in ch.sample_tuples(e3, 40, "mixed", seed=3) + ch.sample_tuples(e3, 10, "torsion", seed=3):
        for h in e3.canonical_height_G(x).per_index:
            assert h.value >= -h.tail


def test_transform_by_distinguished_words(e3):
    """hhat_G(g x) from the moved points vs sum chi_i(g) hhat_i(x)."""
    for x in ch.sample_tuples(e3, 3, "mixed", seed=4):
        est = e3.canonical_height_G(x)
        for w in e3.words:
            gx = e3.apply(w, x)
            moved = e3.canonical_height_G(gx)
            chi = e3.chi(w)
            want = sum(c * h.value for c, h in zip(chi, est.per_index))
            tail = moved.tail + sum(c * h.tail for c, h in zip(chi, est.per_index))
            assert abs(moved.value - want) <= tail
            for i, h in enumerate(moved.per_index):
                assert abs(h.value - chi[i] * est.per_index[i].value) <= h.tail + chi[i] * est.per_index[i].tail


def _product_interval(est):
    lo = hi = 1.0
    for h in est.per_index:
        lo *= max(h.value - h.tail, 0.0)
        hi *= h.value + h.tail
    return lo, hi


def test_product_height_invariant_and_amgm(e3):
    for x in ch.sample_tuples(e3, 4, "mixed", seed=5):
        est = e3.canonical_height_G(x)
        prod = ch.product_height(e3, x, est)
        assert prod ** (1 / 3) <= est.value / 3 + 1e-12
        for w in e3.words:
            gx = e3.apply(w, x)
            moved = e3.canonical_height_G(gx)
            lo, hi = _product_interval(est)
            mlo, mhi = _product_interval(moved)
            assert mlo <= hi and lo <= mhi
            assert mlo <= ch.product_height(e3, gx, moved) <= mhi


def test_classify_mixed_all_false(e3):
    x = ch.sample_tuples(e3, 1, "mixed", seed=6)[0]
    rep = ch.classify_zero_locus(e3, x)
    assert rep.classification == ch.NONPERIODIC
    assert not any(rep.conditions.values())
    for v in e3.eds.eigenvectors:
        assert np.abs(v).min() > 1e-3   # no eigenvector has a zero coordinate


def test_classify_torsion_all_true(e3):
    x = ch.sample_tuples(e3, 1, "torsion", seed=7)[0]
    rep = ch.classify_zero_locus(e3, x)
    assert rep.classification == ch.PERIODIC_ALL and all(rep.conditions.values())


def test_arithmetic_degree_abelian(e3):
    x = [_q(e3), ec.O, ec.O]
    assert ch.arithmetic_degree(e3, (1, 0), x) == pytest.approx(3.532089, rel=0.01)
    t = ch.sample_tuples(e3, 1, "torsion")[0]
    assert ch.arithmetic_degree(e3, (1, 0), t) == 1.0


def test_counting_abelian(e3):
    x = [_q(e3), ec.O, ec.O]
    table = ch.counting_function(e3, (1, 0), x)
    assert not table.divergent
    assert table.limit == pytest.approx(1 / math.log(3.532089), rel=1e-6)
    assert abs(table.final_ratio / table.limit - 1) < 0.05
    ns = [r[1] for r in table.rows]
    assert ns == sorted(ns)
    t = ch.sample_tuples(e3, 1, "torsion")[0]
    assert ch.counting_function(e3, (1, 0), t).divergent


# -- Wehler kind --------------------------------------------------------------


def test_wehler_depth_stability(wsys):
    for p in wsys.surface.base_points:
        for i in range(2):
            h4 = wsys.telescoping_height(i, p, m_max=4)
            h5 = wsys.telescoping_height(i, p, m_max=5)
            assert abs(h5.value - h4.value) <= h4.tail
            assert h5.tail < h4.tail


def test_wehler_functional_equation(wsys):
    for p in wsys.surface.base_points[:3]:
        est = wsys.canonical_height_G(p)
        q = wehler.phi(wsys.surface, p)
        moved = wsys.canonical_height_G(q)
        hp, hm = est.per_index
        mp, mm = moved.per_index
        assert abs(mp.value - LAM * hp.value) <= mp.tail + LAM * hp.tail
        assert abs(mm.value - hm.value / LAM) <= mm.tail + hm.tail / LAM


def test_wehler_positivity_and_boundedness(wsys, wpoints):
    for p in wpoints:
        est = wsys.canonical_height_G(p)
        assert all(h.value >= -h.tail for h in est.per_index)
        assert abs(est.defect) < DEFECT_BOUND
    p = wsys.surface.base_points[3]
    for k in range(1, 3):
        est = wsys.canonical_height_G(wehler.apply_word(wsys.surface, p, k))
        assert abs(est.defect) < DEFECT_BOUND + est.tail


def test_northcott_instance(wsys, wpoints):
    for p in wpoints:
        est = wsys.canonical_height_G(p)
        if est.value <= 0.01:
            assert ch.classify_zero_locus(wsys, p).classification == ch.PERIODIC_ALL


def test_periodic_point_everything_zero(wsys):
    p = wehler.SurfacePoint.from_json(wsys.meta["periodic_point"])
    rep = ch.classify_zero_locus(wsys, p)
    assert rep.classification == ch.PERIODIC_ALL and all(rep.conditions.values())
    assert ch.product_height(wsys, p) == 0.0
    assert ch.arithmetic_degree(wsys, (1,), p) == 1.0
    assert ch.counting_function(wsys, (1,), p).divergent


def test_wehler_arithmetic_degree(wsys):
    p = wehler.SurfacePoint.from_json(wsys.meta["counting_point"])
    for g in ((1,), (-1,)):
        assert ch.arithmetic_degree(wsys, g, p) == pytest.approx(LAM, rel=0.1)


def test_scatter_data(wsys, wpoints):
    rows = ch.scatter_data(wsys, wpoints[:3])
    assert len(rows) == 3
    for hg, prod, tail in rows:
        assert prod ** 0.5 <= hg / 2 + tail


# -- loading ------------------------------------------------------------------


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError) as err:
        ch.load_system({"kind": "abelian", "curve": {"a4": "-1"}})
    assert err.value.field == "generators"
    with pytest.raises(ConfigError) as err:
        ch.load_system({"kind": "torus"})
    assert err.value.field == "kind"
    with pytest.raises(ConfigError) as err:
        ch.load_system({"kind": "abelian", "curve": {}, "generators": {"A": [[1]]}})
    assert err.value.field == "curve"
    with pytest.raises(ConfigError) as err:
        ch.load_system({"kind": "wehler", "L": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})
    assert err.value.field == "Q"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError) as err:
        ch.load_system(str(bad))
    assert err.value.field == "system"


def test_sample_tuples_deterministic(e3):
    a = ch.sample_tuples(e3, 5, "mixed", seed=9)
    b = ch.sample_tuples(e3, 5, "mixed", seed=9)
    assert a == b
    for x in a:
        assert not e3.all_torsion(x) and any(ec.is_torsion(e3.curve, p) for p in x)
