import csv
import json
import math

import numpy as np
import pytest

from freebrown import cli
from freebrown import closed_form as cf
from freebrown.spectral import InitialData, projection_measure


def run(args, capsys=None):
    return cli.main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_region_outputs(tmp_path):
    out = tmp_path / "r"
    assert run(["region", "--t", 1, "--alpha", 0.8, "--samples", 64, "--format", "svg", "--out", out]) == 0
    rows = read_csv(out / "region.csv")
    assert rows[0] == ["curve", "re", "im"]
    assert {r[0] for r in rows[1:]} == {"sigma", "omega", "circle_1ma_a", "gamma", "inv_gamma"}
    svg = (out / "region.svg").read_text()
    assert 'viewBox="-3 -3 6 6"' in svg and "<polygon" in svg
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "region"
    assert {a["path"] for a in man["artifacts"]} == {"region.csv", "region.svg"}
    assert dict(man["parameters"])["samples"] == 64


def test_csv_number_format(tmp_path):
    out = tmp_path / "r"
    run(["region", "--t", 2, "--alpha", 0.3, "--samples", 16, "--out", out])
    for row in read_csv(out / "region.csv")[1:]:
        for v in row[1:]:
            assert "," not in v
            assert v == "%.17g" % float(v)


def test_sample_minimum(tmp_path):
    assert run(["region", "--t", 1, "--alpha", 0.5, "--samples", 15, "--out", tmp_path]) == 2
    assert run(["region", "--t", 1, "--alpha", 0.5, "--samples", 16, "--out", tmp_path]) == 0


def test_usage_errors(tmp_path):
    assert run(["region", "--t", 1, "--alpha", 1.5, "--out", tmp_path]) == 2
    assert run(["region", "--alpha", 0.5, "--out", tmp_path]) == 2
    assert run(["nonsense"]) == 2
    assert run(["characteristic", "--lambda0", "1;2", "--alpha", 0.5, "--out", tmp_path]) == 2
    assert run(["field", "--t", 1, "--alpha", 0.5, "--grid", "1:0:3,0:1:3", "--out", tmp_path]) == 2


def test_characteristic_x0_zero(tmp_path, capsys):
    out = tmp_path / "c"
    assert run(["characteristic", "--lambda0", "1,1", "--alpha", 0.5, "--u-max", 1, "--out", out]) == 0
    rows = read_csv(out / "characteristic.csv")
    assert rows[0] == cli.CHAR_COLUMNS
    data = np.array(rows[1:], dtype=float)
    assert np.all(data[:, 3] == 0)
    for j in (7, 8, 9, 10):
        assert np.max(np.abs(data[:, j] - data[0, j])) <= 1e-8
    assert np.max(np.abs(data[:, 11] - np.hypot(data[:, 1], data[:, 2]))) < 1e-8
    assert "status completed" in capsys.readouterr().out


def test_characteristic_blowup(tmp_path, capsys):
    out = tmp_path / "c"
    assert run(["characteristic", "--lambda0", "2,0", "--x0", 0.01, "--alpha", 0.5, "--u-max", 5, "--out", out]) == 0
    text = capsys.readouterr().out
    assert "status blew_up" in text
    ts = cf.blowup_time(projection_measure(0.5), InitialData(2.0, 0.01))
    last_u = float(read_csv(out / "characteristic.csv")[-1][0])
    assert last_u < 5 and abs(last_u - ts) < 1e-4


def test_negative_real_part_value(tmp_path):
    out = tmp_path / "c"
    assert run(["characteristic", "--lambda0", "-1,2", "--alpha", 0.5, "--out", out]) == 0
    assert float(read_csv(out / "characteristic.csv")[1][1]) == -1.0


def test_field(tmp_path):
    out = tmp_path / "f"
    assert run(["field", "--t", 1, "--alpha", 0.5, "--grid", "-3:3:21,-3:3:21", "--out", out]) == 0
    rows = read_csv(out / "field.csv")
    assert rows[0] == ["re", "im", "s_t", "laplacian", "mask"]
    assert len(rows) == 1 + 21 * 21
    masks = {r[4] for r in rows[1:]}
    assert masks <= {"outside", "inside", "boundary", "singular"} and "outside" in masks
    lap = [float(r[3]) for r in rows[1:] if r[4] == "outside"]
    assert max(abs(v) for v in lap) <= 10 * 0.3**2
    assert run(["field", "--t", 1, "--alpha", 0.5, "--format", "svg", "--out", out]) == 2


def test_rmt_and_replay(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["rmt", "--n", 32, "--t", 1, "--alpha", 0.5, "--steps", 40, "--seed", 7, "--reps", 2, "--format", "svg"]
    assert run(args + ["--out", a]) == 0
    stats = json.loads((a / "stats.json").read_text())
    assert stats["n"] == 32 and stats["seed"] == 7 and stats["rank"] == 16
    assert (a / "cloud.svg").exists()
    rows = read_csv(a / "eigenvalues.csv")
    assert rows[0] == ["re", "im", "replicate"] and len(rows) == 65
    assert run(["replay", a / "manifest.json", "--out", b]) == 0
    for name in ("eigenvalues.csv", "stats.json", "cloud.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    ma.pop("wall_time")
    mb.pop("wall_time")
    assert ma == mb


def test_replay_detects_mismatch(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["region", "--t", 1, "--alpha", 0.5, "--samples", 32, "--out", a])
    man = json.loads((a / "manifest.json").read_text())
    man["artifacts"][0]["sha256"] = "0" * 64
    (a / "manifest.json").write_text(json.dumps(man))
    assert run(["replay", a / "manifest.json", "--out", b]) == 1
    assert run(["replay", a / "manifest.json", "--out", a]) == 2


def test_check_fast(tmp_path, capsys):
    out = tmp_path / "chk"
    code = run(["check", "--level", "fast", "--seed", 1, "--out", out])
    text = capsys.readouterr().out
    assert code == 0, text
    rep = json.loads((out / "report.json").read_text())
    assert rep["passed"] and rep["failed"] == []
    assert len(rep["suites"]) == 10 and text.count("PASS") == 10


def test_check_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["check", "--seed", 2, "--out", a])
    run(["check", "--seed", 2, "--out", b])
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_check_failure_exit(tmp_path, monkeypatch):
    from freebrown import checks

    monkeypatch.setattr(checks, "FAST", [lambda rng: checks.SuiteResult("broken", False)])
    assert run(["check", "--out", tmp_path]) == 1
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["failed"] == ["broken"]


def test_numerical_failure_exit(tmp_path, monkeypatch):
    from freebrown import region

    def boom(*a, **k):
        raise region.BracketError("no bracket")

    monkeypatch.setattr(region, "boundary_sigma", boom)
    assert run(["region", "--t", 1, "--alpha", 0.5, "--out", tmp_path]) == 3
