import json

import pytest

from psifrac.config import DEFAULTS, ProblemConfig, load_config
from psifrac.exceptions import ConfigError
from psifrac.exprdsl import UnknownIdentifierError


def test_defaults_resolve():
    cfg = ProblemConfig.from_dict({})
    assert cfg.to_dict()["grid"] == DEFAULTS["grid"]
    assert cfg.problem().order.alpha == (1.0, 1.0)


def test_nested_merge_and_numbers():
    cfg = ProblemConfig.from_dict({"grid": {"nx": 32}, "phi": 1, "f": "u/2", "Lf": 0.5})
    d = cfg.to_dict()
    assert d["grid"]["nx"] == 32 and d["grid"]["ny"] == 128
    assert d["phi"] == "1.0"
    assert cfg.problem().contraction == pytest.approx(0.25)


def test_lf_expression_uses_grid_supremum():
    cfg = ProblemConfig.from_dict({"Lf": "0.5 + x*y", "grid": {"nx": 8, "ny": 8}})
    assert cfg.lf_value() == pytest.approx(1.5)


@pytest.mark.parametrize("raw", [{"colour": 1}, {"grid": {"nz": 3}}, {"order": {"alpha1": 2.0}}, []])
def test_rejects_bad_blocks(raw):
    with pytest.raises(ConfigError):
        ProblemConfig.from_dict(raw)


def test_rejects_bad_expression():
    with pytest.raises(UnknownIdentifierError):
        ProblemConfig.from_dict({"phi": "y"})


def test_report_is_accepted_as_config(tmp_path):
    path = tmp_path / "report.json"
    path.write_text(json.dumps({"config": {"f": "u", "tol": 1e-8}, "passed": True}))
    assert load_config(path).data["tol"] == 1e-8


def test_set_and_errors(tmp_path):
    cfg = ProblemConfig.from_dict({})
    cfg.set("grid.nx", 16)
    assert cfg.grid().nx == 16
    with pytest.raises(ConfigError):
        cfg.set("grid.nz", 1)
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError, match="line 1"):
        load_config(bad)
