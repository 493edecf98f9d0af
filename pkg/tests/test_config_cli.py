import json

import pytest

from mimcav.cli import main
from mimcav.config import ConfigError, RunConfig, SweepRange


def test_config_round_trip(tmp_path):
    cfg = RunConfig().updated({"reflectivity": 0.3}, {"sweep": ["q", "Q"],
                              "ranges": [{"lo": 1.9, "hi": 2.1, "points": 5}, {"lo": -0.1, "hi": 0.1, "points": 3}]},
                              {"format": "json"})
    assert RunConfig.loads(cfg.dumps()) == cfg
    path = tmp_path / "run.yaml"
    path.write_text("geometry:\n  reflectivity: 0.3\n")
    assert RunConfig.load(path).geometry.reflectivity == 0.3


def test_config_rejects_unknown_and_invalid():
    with pytest.raises(ConfigError):
        RunConfig.loads('{"geometry": {"reflectivty": 0.5}}')
    with pytest.raises(ConfigError):
        RunConfig.loads('{"geometry": {"reflectivity": 1.5}}')
    with pytest.raises(ConfigError):
        RunConfig().updated({}, {"sweep": ["q", "Q"]}, {})
    with pytest.raises(ConfigError):
        SweepRange.parse("1:2")


def _run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_spectrum_default_rows_and_determinism(tmp_path):
    code, out = _run(tmp_path, "a.csv", "spectrum")
    assert code == 0
    text = out.read_text()
    data = [line for line in text.splitlines() if not line.startswith("#")]
    assert data[0] == "q,multiplet_n,branch_i,omega,continuity_flag"
    assert len(data) == 1 + 3 * 401
    assert all(line.endswith(",1") for line in data[1:])
    _, again = _run(tmp_path, "b.csv", "spectrum")
    assert again.read_bytes() == out.read_bytes()


def test_spectrum_bad_geometry_exit_code(tmp_path):
    code, out = _run(tmp_path, "x.csv", "spectrum", "--range", "1.9:7.5:5")
    assert code == 2
    assert not out.exists()
    assert main(["spectrum", "--n-membranes", "3"]) == 2
    assert main(["spectrum", "--reflectivity", "2"]) == 2


def test_spectrum_discontinuity_exit_code(tmp_path):
    code, out = _run(tmp_path, "d.csv", "spectrum", "--range", "0.5:5:3")
    assert code == 3
    assert out.exists()


def test_spectrum_json_and_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"operation": {"sweep": ["Q2"], "ranges": [{"lo": -0.05, "hi": 0.05, "points": 5}]},
                               "geometry": {"n_membranes": 3}, "output": {"format": "json"}}))
    code, out = _run(tmp_path, "s.json", "spectrum", "--config", str(cfg))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["meta"]["geometry"]["membrane_count"] == 3
    assert len(doc["result"]["rows"]) == 4 * 5


def test_couplings_command(tmp_path):
    code, out = _run(tmp_path, "c.json", "couplings")
    assert code == 0
    coeffs = json.loads(out.read_text())["result"]["coefficients"]
    assert [c["i"] for c in coeffs] == [1, 2, 3]
    assert coeffs[1]["deviation"]["b_rel"]["rel"] < 1e-6
    assert coeffs[0]["deviation"]["m_rel"]["rel"] < 1e-4


def test_couplings_contamination_exit_code(tmp_path):
    code, out = _run(tmp_path, "c.json", "couplings", "--reflectivity", "0.999", "--step", "0.09", "--branches", "2")
    assert code == 3
    assert "error" in json.loads(out.read_text())["result"]["coefficients"][0]


def test_modes_command(tmp_path):
    code, out = _run(tmp_path, "m.json", "modes", "--n-membranes", "3")
    assert code == 0
    res = json.loads(out.read_text())["result"]
    assert res["symmetric_count"] == 2
    assert all(s["flag_agrees"] for s in res["symmetry"])


def test_validate_default_and_corrupted(tmp_path, capsys):
    code, out = _run(tmp_path, "v.json", "validate")
    assert code == 0
    assert json.loads(out.read_text())["result"]["passed"]
    assert "[FAIL]" not in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"operation": {"tolerances": {"root_rel": 1e-30}}}))
    code, _ = _run(tmp_path, "v2.json", "validate", "--config", str(bad))
    assert code == 1
    bad.write_text(json.dumps({"operation": {"tolerances": {"nope": 1.0}}}))
    code, _ = _run(tmp_path, "v3.json", "validate", "--config", str(bad))
    assert code == 2


def test_validate_perfect_mirrors(tmp_path):
    code, out = _run(tmp_path, "v.json", "validate", "--reflectivity", "1")
    assert code == 0
