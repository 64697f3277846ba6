import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from canonical_heights.cone_engine import (CommutingFamily, ConeMap, ConeSpec, character_structure_report,
                                           common_eigenvectors, eigen_residual, pf_eigenvector, smat,
                                           spectral_radius, svec)
from canonical_heights.errors import ConeNotPreserved, InvalidCone, NotCommuting

C = [[0, 0, 1], [1, 0, 3], [0, 1, 0]]
CI = [[1, 0, 1], [1, 1, 3], [0, 1, 1]]


def _mu(k):
    return 2 * math.cos(math.radians(20 + 120 * k))


def test_svec_roundtrip():
    m = np.array([[1.0, 2.0, 3.0], [2.0, 5.0, 6.0], [3.0, 6.0, 9.0]])
    v = svec(m)
    assert np.allclose(smat(v, 3), m)
    assert v.tolist() == [1.0, 2.0, 3.0, 5.0, 6.0, 9.0]


def test_pf_orthant_golden():
    rho, v = pf_eigenvector(ConeMap.from_matrix([[2, 1], [1, 1]]), ConeSpec.orthant(2))
    assert math.isclose(rho, (3 + math.sqrt(5)) / 2, rel_tol=1e-12)
    assert np.allclose(v, [1.0, (math.sqrt(5) - 1) / 2])


def test_pf_psd_identity_is_scaled_identity():
    rho, v = pf_eigenvector(ConeMap.congruence_map([[1, 0, 0], [0, 1, 0], [0, 0, 1]]), ConeSpec.psd(3))
    assert rho == pytest.approx(1.0)
    assert np.allclose(v, np.eye(3) / 3)


def test_not_preserved():
    with pytest.raises(ConeNotPreserved):
        pf_eigenvector(ConeMap.from_matrix([[1, -1], [0, 1]]), ConeSpec.orthant(2))


def test_polyhedral_cone_rejects_line():
    with pytest.raises(InvalidCone):
        ConeSpec.polyhedral(generators=[[1, 0], [-1, 0], [0, 1]])


def test_noncommuting_family():
    a = ConeMap.from_matrix([[1, 1], [0, 1]])
    b = ConeMap.from_matrix([[1, 0], [1, 1]])
    with pytest.raises(NotCommuting):
        CommutingFamily.of([a, b])


def test_companion_characters_trig_oracle():
    fam = CommutingFamily.of([ConeMap.congruence_map(C, "A"), ConeMap.congruence_map(CI, "B")])
    chars = common_eigenvectors(fam, ConeSpec.psd(3))
    got = sorted(c.values for c in chars)
    want = sorted((_mu(k) ** 2, (_mu(k) + 1) ** 2) for k in range(3))
    assert np.allclose(got, want, rtol=0, atol=1e-10)
    for c in chars:
        assert eigen_residual(c, fam, ConeSpec.psd(3)) < 1e-9
    rep = character_structure_report(chars, fam)
    assert rep["count"] == 3 and rep["distinct"] and rep["noncollinear"] and rep["independent"]


def test_spectral_radius_exact_charpoly():
    rho, poly = spectral_radius(ConeMap.from_matrix(C))
    assert poly == [1, 0, -3, -1]
    assert math.isclose(rho, _mu(0), rel_tol=1e-12)


def test_identity_family_on_orthant():
    fam = CommutingFamily.of([ConeMap.from_matrix([[1, 0], [0, 1]])])
    chars = common_eigenvectors(fam, ConeSpec.orthant(2))
    assert len(chars) == 2


def test_cone_json_roundtrip():
    cone = ConeSpec.polyhedral(generators=[[1, 0], [1, 1]])
    back = ConeSpec.from_json(cone.to_json())
    assert back.contains([2.0, 1.0]) and not back.contains([0.0, 1.0])


pos = st.integers(1, 4)


@given(st.lists(st.lists(pos, min_size=3, max_size=3), min_size=3, max_size=3),
       st.lists(st.integers(0, 3), min_size=3, max_size=3),
       st.lists(st.integers(0, 3), min_size=3, max_size=3))
@settings(max_examples=25, deadline=None)
def test_polynomials_in_positive_matrix(m, p, q):
    """Polynomials with nonnegative coefficients in a positive matrix commute,
    preserve the orthant and share the Perron vector."""
    m = np.array(m)
    eye = np.eye(3, dtype=int)

    def poly(c):
        return c[0] * eye + c[1] * m + c[2] * (m @ m)

    pa, pb = poly(p), poly(q)
    if not pa.any() or not pb.any():
        return
    fam = CommutingFamily.of([ConeMap.from_matrix(pa.tolist(), "a"), ConeMap.from_matrix(pb.tolist(), "b")])
    chars = common_eigenvectors(fam, ConeSpec.orthant(3))
    w, vecs = np.linalg.eig(m.astype(float))
    k = int(np.argmax(w.real))
    perron = np.abs(vecs[:, k].real)
    lam = w[k].real
    want = (p[0] + p[1] * lam + p[2] * lam ** 2, q[0] + q[1] * lam + q[2] * lam ** 2)
    hit = [c for c in chars if np.allclose(np.asarray(c.values), want, rtol=1e-8)]
    assert hit
    v = np.asarray(hit[0].eigenvector, dtype=float)
    assert abs(abs(v @ perron) - np.linalg.norm(v) * np.linalg.norm(perron)) < 1e-7 * np.linalg.norm(v)
    rep = character_structure_report(chars, fam)
    assert rep["consistent"]
