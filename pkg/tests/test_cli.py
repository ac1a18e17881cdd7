import json
import math
import subprocess
import sys

import pytest

from escfatou.cli import RunConfig, UsageError, run


def _report(capsys, argv):
    code = run(argv)
    return code, json.loads(capsys.readouterr().out)


def test_circle_stats_example(capsys):
    code, rep = _report(capsys, ["circle-stats", "--f", "(exp(z)-1)/(exp(-z)+1)", "--r", "60"])
    assert code == 0 and 0.45 <= rep["ratio_m_over_T"] <= 0.55


def test_hyperdist_example(capsys):
    code, rep = _report(capsys, ["hyperdist", "--annulus", "1,535.49", "--sigma", "0.3333", "--tau", "0.6667"])
    assert code == 0
    assert rep["lower"] == pytest.approx(math.pi / 3, abs=1e-3)
    assert rep["upper"] == pytest.approx(7.512, abs=1e-3)
    assert rep["lower"] <= rep["distance"] <= rep["upper"]


def test_orbit_example(capsys):
    code, rep = _report(capsys, ["orbit", "--f", "z+sin(z)+2*pi", "--z0", "pi", "--n", "10"])
    assert code == 0
    pts = rep["orbit"]["points"]
    for n, p in enumerate(pts):
        re = p[0] if isinstance(p, list) else p
        assert re == pytest.approx((2 * n + 1) * math.pi, rel=1e-12)


def test_exit_codes(capsys, tmp_path):
    assert run(["nonsense"]) == 1
    assert run(["orbit", "--bogus", "1"]) == 1
    assert run(["circle-stats", "--f", "exp(", "--r", "5"]) == 1
    assert run(["--config", str(tmp_path / "missing.json")]) == 1
    # on a thin annulus near the unit circle exp does not cover the candidate annulus
    out = tmp_path / "r.json"
    code = run(["cover-check", "--f", "exp(z)", "--annulus", "1,2", "--z1", "1.2", "--z2", "1.8",
                "--out", str(out)])
    assert code == 2 and out.exists()
    capsys.readouterr()


def test_config_round_trip(tmp_path):
    cfg, a, b = tmp_path / "cfg.json", tmp_path / "a.json", tmp_path / "b.json"
    sa, sb = tmp_path / "a.svg", tmp_path / "b.svg"
    assert run(["orbit", "--f", "z+sin(z)+2*pi", "--z0", "pi", "--n", "12", "--seed", "7",
                "--out", str(a), "--svg", str(sa), "--emit-config", str(cfg)]) == 0
    data = json.loads(cfg.read_text())
    data["out"], data["svg"] = str(b), str(sb)
    cfg.write_text(json.dumps(data))
    assert run(["--config", str(cfg)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert sa.read_bytes() == sb.read_bytes()
    assert data["seed"] == 7 and data["schema_version"] == 1


def test_bad_configs(tmp_path):
    with pytest.raises(UsageError):
        RunConfig.from_json({"command": "orbit", "params": {}, "surprise": 1})
    with pytest.raises(UsageError):
        RunConfig.from_json({"command": "orbit", "params": {}, "schema_version": 99})
    with pytest.raises(UsageError):
        RunConfig.from_json({"command": "fly", "params": {}})
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert run(["--config", str(p)]) == 1


def test_deficiency_csv(tmp_path, capsys):
    csv = tmp_path / "d.csv"
    assert run(["deficiency", "--f", "(exp(z)-1)/(exp(-z)+1)", "--radii", "20,40", "--csv", str(csv)]) == 0
    lines = csv.read_text().strip().splitlines()
    assert len(lines) == 3 and lines[0].startswith("r,")
    capsys.readouterr()


def test_entry_point():
    res = subprocess.run([sys.executable, "-m", "escfatou.cli", "hyperdist", "--annulus", "1,100",
                          "--sigma", "0.3", "--tau", "0.6"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["schema_version"] == 1
