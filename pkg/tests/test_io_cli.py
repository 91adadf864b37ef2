import json
import math

import numpy as np
import pytest

from isoprofile.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, EXIT_USAGE, run
from isoprofile.convex import make_ball
from isoprofile.errors import UnsupportedBody
from isoprofile.io import body_from_dict, curve_from_csv, curve_to_csv, fmt, read_csv, round_floats, save_body, write_csv
from isoprofile.profile import profile_curve

SQUARE = {"kind": "polytope", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]], "name": "square"}


@pytest.fixture
def square_file(tmp_path):
    path = tmp_path / "square.json"
    path.write_text(json.dumps(SQUARE))
    return str(path)


def _run(capsys, argv):
    code = run(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_fmt_and_rounding():
    assert fmt(math.pi) == "3.14159265359"
    assert fmt(1e-20 / 3) == "3.33333333333e-21"
    assert fmt(3) == "3" and fmt(True) == "true" and fmt(float("nan")) == "nan"
    assert round_floats({"a": [1 / 3, np.float64(2 / 3)]}) == {"a": [0.333333333333, 0.666666666667]}


def test_body_dict_roundtrip(tmp_path):
    body = body_from_dict(SQUARE)
    path = tmp_path / "b.json"
    save_body(body, path)
    again = body_from_dict(json.loads(path.read_text()))
    assert np.allclose(again.vertices, body.vertices)
    ball = body_from_dict({"kind": "ball", "center": [0, 0], "radius": 2})
    assert ball.radius == 2
    with pytest.raises(UnsupportedBody):
        body_from_dict({"kind": "blob"})
    with pytest.raises(UnsupportedBody):
        body_from_dict(dict(SQUARE, dim=3))


def test_csv_roundtrip():
    text = write_csv([{"a": 1 / 3, "b": "x"}], ["a", "b"], {"k": 1})
    meta, rows = read_csv(text)
    assert meta == {"k": 1}
    assert rows == [{"a": "0.333333333333", "b": "x"}]


def test_curve_csv_roundtrip():
    disk = make_ball([0, 0], 1.0)
    curve = profile_curve(disk, [0.5, 1.0, 1.5])
    again = curve_from_csv(curve_to_csv(curve))
    assert [s.v for s in again.samples] == [0.5, 1.0, 1.5]
    assert all(abs(a.value - b.value) <= 1e-11 * a.value for a, b in zip(curve.samples, again.samples))
    with pytest.raises(ValueError):
        curve_from_csv("v,method,value\n")


def test_body_subcommand(capsys, square_file):
    code, out, _ = _run(capsys, ["body", square_file, "--format", "json"])
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["data"]["volume"] == 1.0
    assert doc["meta"]["tool"] == "isoprofile" and "wall_time" in doc["meta"]


def test_profile_idempotent_and_seed_env(capsys, square_file, monkeypatch):
    argv = ["profile", square_file, "--v-grid", "0.1:0.9:0.2"]
    _, first, _ = _run(capsys, argv)
    _, second, _ = _run(capsys, argv)
    assert first.splitlines()[1:] == second.splitlines()[1:]
    meta, rows = read_csv(first)
    assert meta["seed"] == 0 and len(rows) == 5
    assert float(rows[0]["value"]) == pytest.approx(math.sqrt(0.1 * math.pi), rel=1e-11)
    monkeypatch.setenv("ISOPROFILE_SEED", "17")
    meta, _ = read_csv(_run(capsys, argv)[1])
    assert meta["seed"] == 17
    meta, _ = read_csv(_run(capsys, argv + ["--seed", "3"])[1])
    assert meta["seed"] == 3


def test_audit_exit_codes(capsys, square_file, tmp_path):
    _, text, _ = _run(capsys, ["profile", square_file, "--v-grid", "0.05:0.95:0.05"])
    good = tmp_path / "good.csv"
    good.write_text(text)
    assert _run(capsys, ["audit", "concavity", str(good)])[0] == EXIT_OK
    lines = text.splitlines()
    cols = lines[2].split(",")
    cols[2] = fmt(float(cols[2]) * 0.5)
    lines[2] = ",".join(cols)
    mid = lines[8].split(",")
    mid[2] = fmt(float(mid[2]) * 0.8)
    lines[8] = ",".join(mid)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert _run(capsys, ["audit", "concavity", str(bad)])[0] == EXIT_FAIL
    assert _run(capsys, ["audit", "curvature", str(good), "--v", "0.1"])[0] == EXIT_OK


def test_usage_and_error_codes(capsys, square_file):
    assert _run(capsys, [])[0] == EXIT_USAGE
    assert _run(capsys, ["frobnicate"])[0] == EXIT_USAGE
    assert _run(capsys, ["audit", "concavity", "x.csv", "--tol", "bogus=1"])[0] == EXIT_USAGE
    assert _run(capsys, ["body", square_file, "--tol", "1e-3"])[0] == EXIT_USAGE
    assert _run(capsys, ["body", "/nonexistent/body.json"])[0] == EXIT_ERROR
    assert _run(capsys, ["profile", square_file, "--v-grid", "0.5:1.5:0.5"])[0] == EXIT_ERROR


def test_cone_angles_and_map_lip(capsys, tmp_path, square_file):
    tri = tmp_path / "tri.json"
    tri.write_text(json.dumps({"kind": "polytope", "vertices": [[0, 0], [4, 0], [0, 3]]}))
    code, out, _ = _run(capsys, ["cone-angles", str(tri)])
    assert code == EXIT_OK
    assert "0.643501108793" in out
    code, out, _ = _run(capsys, ["map-lip", square_file, str(tri), "--pairs", "2000", "--format", "json"])
    assert code == EXIT_OK
    assert json.loads(out)["data"]["analytic_bound"] >= json.loads(out)["data"]["lip_forward"]


def test_oracle_and_density_audit(capsys, square_file, tmp_path):
    region = tmp_path / "region.json"
    code, _, _ = _run(capsys, ["oracle", square_file, "--v", "0.5", "--resolution", "16", "--region-out", str(region)])
    assert code == EXIT_OK and region.exists()
    code, out, _ = _run(capsys, ["density-audit", square_file, str(region), "--probes", "32"])
    assert code == EXIT_OK
    meta, rows = read_csv(out)
    assert len(rows) >= 32


def test_audits_on_mixed_provenance_curve(capsys, square_file, tmp_path):
    _, text, _ = _run(capsys, ["profile", square_file, "--v-grid", "0.05:0.95:0.05", "--methods", "upper,lower"])
    path = tmp_path / "mixed.csv"
    path.write_text(text)
    assert _run(capsys, ["audit", "scaling", str(path), "--lam", "0.5,2"])[0] == EXIT_OK
    assert _run(capsys, ["audit", "curvature", str(path), "--v", "0.1"])[0] == EXIT_OK
    assert _run(capsys, ["audit", "concavity", str(path)])[0] == EXIT_ERROR
    assert _run(capsys, ["audit", "concavity", str(path), "--provenance", "upper"])[0] == EXIT_OK
