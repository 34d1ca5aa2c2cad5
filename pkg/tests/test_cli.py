import csv
import io
import json
from pathlib import Path

import pytest

from psifrac.cli import run

CLASSICAL = {"f": "u", "order": {"alpha1": 1, "alpha2": 1, "beta": 1}, "grid": {"nx": 32, "ny": 32}}


@pytest.fixture
def config(tmp_path):
    def write(data, name="problem.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return write


def _strip(report: dict) -> dict:
    report = dict(report)
    report.pop("timestamp")
    return report


def test_ml(capsys):
    assert run(["ml", "--alpha", "1", "--z", "1"]) == 0
    assert capsys.readouterr().out.strip() == "2.718281828459045"


def test_oracle(capsys):
    assert run(["oracle", "power1d", "--alpha", "0.5", "--delta", "2", "--x", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1 / 1.329340388179137, rel=1e-14)
    assert run(["oracle", "unit2d", "--alpha1", "1", "--alpha2", "1", "--x", "2", "--y", "3"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(6.0)


def test_solve_writes_csv(tmp_path, config):
    out = tmp_path / "sol.csv"
    cfg = config({"f": "1", "grid": {"nx": 16, "ny": 16}})
    assert run(["solve", "--config", cfg, "--out", str(out), "--log", str(tmp_path / "log.json")]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 256 and list(rows[0]) == ["x", "y", "value"]
    for r in rows:
        assert float(r["value"]) == pytest.approx(float(r["x"]) * float(r["y"]), abs=1e-12)
    log = json.loads((tmp_path / "log.json").read_text())
    assert log["log"]["converged"] and log["config"]["grid"]["nx"] == 16


def test_grid_override_and_json_format(capsys, config):
    assert run(["solve", "--config", config({"f": "1"}), "--grid", "8x12", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["x"]) == 8 and len(doc["y"]) == 12


def test_exit_codes(capsys, config, tmp_path):
    assert run(["solve", "--config", str(tmp_path / "nope.json")]) == 2
    assert "not found" in capsys.readouterr().err
    assert run(["solve", "--config", config({"f": "w"})]) == 2
    err = capsys.readouterr().err
    assert err.startswith("psifrac: error[2]") and err.count("\n") == 1
    frac = {"f": "1 + u/2", "Lf": 0.5, "order": {"alpha1": 0.75, "alpha2": 0.75, "beta": 0.5}, "grid": {"nx": 32, "ny": 32}}
    assert run(["solve", "--config", config(frac), "--max-iter", "2"]) == 3
    assert "convergence" in capsys.readouterr().err
    assert run(["bogus"]) == 2
    assert run(["solve", "--grid", "12"]) == 2


def test_stability_report_is_deterministic(tmp_path, config):
    cfg = config(CLASSICAL)
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        args = ["stability", "uh", "--config", cfg, "--epsilon", "0.01", "--draws", "3", "--seed", "7", "--out", str(out)]
        assert run(args) == 0
        outs.append(_strip(json.loads(out.read_text())))
    assert outs[0] == outs[1]
    assert outs[0]["pass"] and outs[0]["report"]["passed"] and outs[0]["config"]["stability"]["seed"] == 7
    # the embedded configuration reproduces the run
    again = tmp_path / "c.json"
    assert run(["stability", "uh", "--config", str(tmp_path / "a.json"), "--out", str(again)]) == 0
    assert _strip(json.loads(again.read_text()))["report"] == outs[0]["report"]


def test_stability_uhr(tmp_path, config):
    cfg = config({**CLASSICAL, "psi": {"kind": "builtin", "name": "bounded"}, "f": "u/2", "Lf": 0.5})
    out = tmp_path / "uhr.json"
    assert run(["stability", "uhr", "--config", cfg, "--weight-expr", "1+x+y", "--draws", "2", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["report"]["lambdas"]["certified"]
    assert run(["stability", "uhr", "--config", cfg, "--weight-expr", "x", "--draws", "2"]) == 2
    assert run(["stability", "uhr", "--config", config(CLASSICAL, "id.json"), "--weight-expr", "1+x"]) == 2


def test_gronwall(tmp_path):
    out = tmp_path / "g.json"
    assert run(["gronwall", "--alpha", "0.7", "--n", "64", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["report"]["passed"]


def test_integrate_and_differentiate(capsys, config):
    cfg = config({"grid": {"nx": 40, "ny": 40}})
    assert run(["integrate", "--config", cfg, "--f", "1"]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert float(last[2]) == pytest.approx(1.0)
    assert run(["differentiate", "--config", cfg, "--u", "x^2*y", "--special", "classical"]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert float(last[2]) == pytest.approx(2.0)


def test_reports_match_schema(tmp_path, config):
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((Path(__file__).parents[1] / "docs" / "report.schema.json").read_text())
    cfg = config(CLASSICAL)
    runs = {
        "uh.json": ["stability", "uh", "--config", cfg, "--draws", "2"],
        "uhr.json": ["stability", "uhr", "--config", config({**CLASSICAL, "psi": "bounded", "f": "u/2", "Lf": 0.5}, "b.json"),
                     "--weight-expr", "1+x+y", "--draws", "2"],
        "g.json": ["gronwall", "--alpha", "0.6", "--n", "32"],
    }
    for name, args in runs.items():
        assert run([*args, "--out", str(tmp_path / name)]) == 0
        jsonschema.validate(json.loads((tmp_path / name).read_text()), schema)
    assert run(["solve", "--config", cfg, "--out", str(tmp_path / "s.csv"), "--log", str(tmp_path / "log.json")]) == 0
    jsonschema.validate(json.loads((tmp_path / "log.json").read_text()), schema)
