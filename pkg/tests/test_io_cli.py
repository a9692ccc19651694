import json
import subprocess
import sys

import numpy as np
import pytest

from holonomic import io
from holonomic.cli import main
from holonomic.measures import AtomicMeasure, corner_measure, line_measure


def test_measure_json_roundtrip():
    mu = corner_measure(16)
    obj = io.measure_to_json(mu, K=3, seed=7)
    assert obj["seed"] == 7 and obj["d"] == 2 and obj["n"] == 1
    back = io.measure_from_json(json.loads(json.dumps(obj)))
    assert np.array_equal(back.x, mu.x) and np.array_equal(back.v, mu.v) and np.array_equal(back.w, mu.w)


def test_measure_json_validation():
    mu = AtomicMeasure.dirac([0.2, 0.3], [[1.0, 0.0]])
    with pytest.raises(io.ValidationError, match="holonomy"):
        io.measure_from_json(io.measure_to_json(mu, K=1))
    assert len(io.measure_from_json(io.measure_to_json(mu, K=1), validate=False)) == 1
    with pytest.raises(io.ValidationError, match="weight"):
        io.measure_from_json(io.measure_to_json(mu.scaled(0.5)))


def test_empty_measure_json():
    obj = io.measure_to_json(AtomicMeasure.empty(2, 1))
    assert len(io.measure_from_json(obj, validate=False)) == 0


def test_csv_format(tmp_path):
    path = tmp_path / "t.csv"
    io.write_csv(path, ["a", "b"], [[1, 0.1], [2, 1e-20]], seed=5)
    raw = path.read_bytes()
    assert raw == b"# seed=5\na,b\n1,0.1\n2,1e-20\n"
    header, rows = io.read_csv(path)
    assert header == ["a", "b"] and rows == [["1", "0.1"], ["2", "1e-20"]]


def test_measure_csv(tmp_path):
    mu = AtomicMeasure([[0.5, 0.25]], [[[1.0, -2.0], [0.0, 3.0]]], [1.0])
    io.write_measure_csv(tmp_path / "m.csv", mu)
    header, rows = io.read_csv(tmp_path / "m.csv")
    assert header == ["x_1", "x_2", "v_11", "v_12", "v_21", "v_22", "w"]
    assert [float(c) for c in rows[0]] == [0.5, 0.25, 1.0, -2.0, 0.0, 3.0, 1.0]


# ---------------------------------------------------------------- CLI


def run(*argv):
    return main([str(a) for a in argv])


def test_corner_demo(capsys, tmp_path):
    assert run("corner-demo", "--out", tmp_path) == 0
    assert capsys.readouterr().out.splitlines() == ["pairing -2", "not critical"]
    obj = io.read_json(tmp_path / "corner.json")
    assert obj["witness"]["value"] == pytest.approx(-2.0)


def test_minimize_then_check_critical(capsys, tmp_path):
    assert run("minimize", "--out", tmp_path) == 0
    summary = io.read_csv(tmp_path / "summary.csv")
    assert float(summary[1][0][0]) == pytest.approx(0.5, rel=0.05)
    assert (tmp_path / "measure.csv").exists()
    cfg = tmp_path / "check.yaml"
    cfg.write_text("measure:\n  file: measure.json\n")
    assert run("check-critical", "--config", cfg, "--out", tmp_path, "--tol", 1e-5) == 0
    assert io.read_json(tmp_path / "criticality.json")["critical"] is True


def test_check_critical_corner_fails(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("lagrangian: length\nmeasure: {fixture: corner}\nbattery: {corner: true, homological: false, count: 2}\n")
    assert run("check-critical", "--config", cfg, "--out", tmp_path) == 1
    assert io.read_json(tmp_path / "criticality.json")["witness"]["label"] == "corner"


def test_minimize_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("minimize", "--out", a) == 0
    assert run("minimize", "--out", b) == 0
    for name in ("measure.json", "measure.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.mark.parametrize("kind", ["horizontal", "vertical", "transpositional"])
def test_variation(tmp_path, kind):
    cfg = tmp_path / "v.yaml"
    cfg.write_text(f"measure: {{fixture: line, N: 32}}\nvariation: {{kind: {kind}, functions: 3}}\n")
    assert run("variation", "--config", cfg, "--out", tmp_path) == 0
    header, rows = io.read_csv(tmp_path / "convergence.csv")
    assert header[0] == "function" and len(rows) == 12


def test_stencil(capsys):
    assert run("stencil", "--index", 2, "--nodes=-1,0,1") == 0
    assert capsys.readouterr().out.strip() == "1,-2,1"


def test_stencil_singular(capsys):
    assert run("stencil", "--index", 2, "--nodes=0,1") == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "StencilError"


def test_energy_and_weak_kam(tmp_path, capsys):
    cfg = tmp_path / "e.yaml"
    cfg.write_text("measure: {fixture: line, N: 32, offset: 0.3}\n")
    assert run("energy", "--config", cfg, "--out", tmp_path) == 0
    assert "constant -0.5" in capsys.readouterr().out
    assert run("weak-kam", "--config", cfg, "--out", tmp_path) == 0
    header, rows = io.read_csv(tmp_path / "fit.csv")
    assert rows[0][0] == "const0" and float(rows[0][1]) == pytest.approx(1.0)


def test_energy_needs_differentiability(tmp_path, capsys):
    cfg = tmp_path / "e.yaml"
    path = tmp_path / "zero.json"
    io.write_json(path, io.measure_to_json(AtomicMeasure.dirac([0.1, 0.1], [[0.0, 0.0]])))
    cfg.write_text(f"lagrangian: length\nmeasure: {{file: {path}}}\n")
    assert run("energy", "--config", cfg, "--out", tmp_path) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "NonDifferentiableError"


def test_transport(tmp_path):
    assert run("transport", "--out", tmp_path) == 0
    header, rows = io.read_csv(tmp_path / "transport.csv")
    assert len(rows) == 256


@pytest.mark.parametrize(
    "text, kind",
    [
        ("lagrangian: nonsense\n", "ValueError"),
        ("measure: {fixture: spiral}\n", "ConfigError"),
        ("[unbalanced\n", "ConfigError"),
        ("- a list\n", "ConfigError"),
    ],
)
def test_config_errors(tmp_path, capsys, text, kind):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(text)
    assert run("check-critical", "--config", cfg, "--out", tmp_path) == 2
    assert json.loads(capsys.readouterr().err)["error"] == kind


def test_missing_config(capsys, tmp_path):
    assert run("minimize", "--config", tmp_path / "nope.yaml") == 2
    assert "not found" in json.loads(capsys.readouterr().err)["message"]


def test_infeasible_lp_reports_certificate(tmp_path, capsys):
    cfg = tmp_path / "inf.yaml"
    cfg.write_text("grid: {N: 4, K: 1, velocities: {unit: 8}, homology: [2.0, 0.0]}\n")
    assert run("minimize", "--config", cfg, "--out", tmp_path) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "infeasible" and err["certificate"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "holonomic", "corner-demo"], capture_output=True, text=True)
    assert res.returncode == 0 and "pairing -2" in res.stdout
