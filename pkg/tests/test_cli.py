import csv
import io
import json

import pytest

from canonical_heights import HEIGHT_CONVENTION, __version__
from canonical_heights.cli import run

E3 = "e3"


def _run(*argv):
    buf = io.StringIO()
    code = run(list(argv), stdout=buf)
    return code, json.loads(buf.getvalue()) if buf.getvalue() else None


def test_verify_e3(tmp_path):
    code, out = _run("verify", "--system", E3, "--out", str(tmp_path))
    assert code == 0 and out["passed"]
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["version"] == __version__
    assert man["height_convention"] == HEIGHT_CONVENTION
    assert man["seed"] == 0 and man["budgets"]["iters"] == 8


def test_verify_ns(tmp_path):
    code, out = _run("verify-ns", "--system", E3, "--out", str(tmp_path))
    assert code == 0 and out["passed"]


def test_counting_with_point_file(tmp_path):
    pfile = tmp_path / "P.json"
    pfile.write_text(json.dumps([["-1", "-2"], None, None]))
    out_dir = tmp_path / "run"
    code, out = _run("counting", "--system", E3, "--g", "A", "--point", str(pfile), "--Tmax", "auto",
                     "--out", str(out_dir))
    assert code == 0
    rows = list(csv.reader((out_dir / "table.csv").open()))
    assert rows[0] == ["T", "N", "N_over_logT"]
    final = float(rows[-1][2])
    assert abs(final / out["limit"] - 1) < 0.05
    rec = json.loads((out_dir / "result.json").read_text())
    assert rec["word"] == [1, 0]


def test_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run("canheight", "--system", E3, "--out", str(d))[0] == 0
    for name in ("manifest.json", "result.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_canheight_has_tails(tmp_path):
    code, _ = _run("canheight", "--system", E3, "--out", str(tmp_path))
    rec = json.loads((tmp_path / "result.json").read_text())
    est = rec["estimate"]
    assert "tail" in est and all("tail" in h for h in est["per_index"])
    assert "product_height_tail" in rec


def test_orbit_table_columns(tmp_path):
    code, _ = _run("orbit", "--system", "wehler", "--steps", "2", "--out", str(tmp_path))
    assert code == 0
    rows = list(csv.reader((tmp_path / "table.csv").open()))
    assert rows[0] == ["m", "h", "hhat_plus", "hhat_minus", "tail"]
    assert len(rows) == 4


def test_classify_wehler_periodic(tmp_path):
    point = json.dumps({"x": ["1", "-1", "0"], "y": ["1", "-1", "0"]})
    code, _ = _run("classify", "--system", "wehler", "--point", point, "--out", str(tmp_path))
    assert code == 0
    rec = json.loads((tmp_path / "result.json").read_text())
    assert rec["report"]["classification"] == "PERIODIC_ALL"


def test_alpha_and_distinguished(tmp_path):
    code, out = _run("alpha", "--system", E3, "--g", "A", "--out", str(tmp_path / "a"))
    assert code == 0 and out["alpha"] == pytest.approx(3.532089, rel=0.01)
    code, _ = _run("distinguished", "--system", E3, "--out", str(tmp_path / "d"))
    rec = json.loads((tmp_path / "d" / "result.json").read_text())
    assert rec["words"] == [[0, 1], [1, -1], [-1, 0]]


def test_height_command(tmp_path):
    code, out = _run("height", "--curve", "e3", "--point=-1,-2", "--out", str(tmp_path))
    assert code == 0 and out["value"] == pytest.approx(1.0357, abs=1e-3) and out["tail"] < 1e-3


def test_enumerate_and_periodic(tmp_path):
    code, out = _run("enumerate", "--system", "wehler", "--out", str(tmp_path / "e"))
    assert code == 0 and out["count"] == 7
    code, _ = _run("periodic", "--system", "wehler", "--out", str(tmp_path / "p"))
    rec = json.loads((tmp_path / "p" / "result.json").read_text())
    assert [r["period"] for r in rec["periodic"]] == [1]


def test_malformed_config_names_field(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"kind": "abelian", "curve": {"a4": "-1"}}))
    code, out = _run("canheight", "--system", str(cfg), "--out", str(tmp_path / "o"))
    assert code == 2 and out["field"] == "generators" and out["error"] == "config_error"
    code, out = _run("canheight", "--system", str(tmp_path / "missing.json"))
    assert code == 2 and out["field"] == "system"
    code, out = _run("alpha", "--system", E3, "--g", "Z")
    assert code == 2 and out["field"] == "g"
    code, out = _run("orbit", "--system", "wehler", "--steps", "0")
    assert code == 2 and out["field"] == "steps"


def test_module_error_is_structured(tmp_path):
    cfg = tmp_path / "nc.json"
    cfg.write_text(json.dumps({"kind": "abelian", "curve": {"a2": "-1", "a4": "-6"},
                               "generators": {"A": [[1, 1], [0, 1]], "B": [[1, 0], [1, 1]]}}))
    code, out = _run("characters", "--system", str(cfg))
    assert code == 1 and out["error"] == "not_commuting"


def test_scatter_export(tmp_path):
    code, out = _run("scatter", "--system", E3, "--out", str(tmp_path))
    assert code == 0
    rows = list(csv.reader((tmp_path / "table.csv").open()))
    assert rows[0] == ["hhat_G", "Hhat_G", "tail"] and len(rows) == out["count"] + 1
