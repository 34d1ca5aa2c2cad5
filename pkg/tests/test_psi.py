import math

import numpy as np
import pytest

from psifrac.exceptions import ConfigError, ValidationError
from psifrac.psi import builtin, from_config, from_expr, validate


@pytest.mark.parametrize("name,params", [("identity", ()), ("log", ()), ("power", (2.0,)), ("power", (0.5,)), ("bounded", ())])
def test_builtins_validate(name, params):
    p = builtin(name, params)
    assert validate(p).passed


def test_builtin_derivatives():
    t = np.linspace(1.0, 3.0, 5)
    assert np.allclose(builtin("log").d(t), 1.0 / t)
    assert np.allclose(builtin("power", [3.0]).d(t), 3.0 * t**2)
    assert np.allclose(builtin("bounded").d(t), 1.0 / (1.0 + t) ** 2)


def test_bounded_supremum():
    assert builtin("bounded").sup == 1.0
    assert builtin("bounded", domain=(0.0, 1.0)).sup == 0.5
    assert builtin("identity").sup is None


def test_log_base_rules():
    with pytest.raises(ConfigError):
        builtin("log", domain=(0.0, 2.0))
    with pytest.raises(ConfigError):
        builtin("log").check_base(0.5)
    builtin("log").check_base(1.0)


def test_power_rejects_bad_exponent():
    with pytest.raises(ConfigError):
        builtin("power", [0.0])
    with pytest.raises(ConfigError):
        builtin("power")


def test_unknown_builtin():
    with pytest.raises(ConfigError):
        builtin("cubic")


def test_expression_weight_with_finite_difference_derivative():
    p = from_expr("t^3 + t", (0.0, 2.0))
    t = np.array([0.0, 0.5, 2.0])
    assert np.allclose(p.d(t), 3 * t**2 + 1, rtol=1e-5)


def test_expression_weight_rejected_when_decreasing():
    with pytest.raises(ValidationError):
        from_expr("-t", (0.0, 1.0))
    with pytest.raises(ValidationError):
        from_expr("(t - 1)^2", (0.0, 2.0))


def test_config_round_trip():
    for p in (builtin("power", [2.0]), builtin("bounded"), from_expr("t + t^2", (0.0, 3.0), "1 + 2*t")):
        q = from_config(p.to_config())
        t = np.linspace(0.1, 1.0, 7)
        assert np.allclose(p(t), q(t)) and np.allclose(p.d(t), q.d(t))


def test_config_accepts_name_and_sup():
    assert from_config("identity")(2.0) == 2.0
    p = from_config({"kind": "expr", "value": "atan(t)", "domain": [0, "inf"], "sup": math.pi / 2})
    assert p.sup == pytest.approx(math.pi / 2)
    with pytest.raises(ConfigError):
        from_config({"kind": "expr", "value": "t"})
    with pytest.raises(ConfigError):
        from_config({"kind": "table"})
