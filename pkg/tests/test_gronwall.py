import math

import numpy as np
import pytest

from psifrac.exceptions import ConvergenceError, DomainError, ValidationError
from psifrac.grid import graded_nodes
from psifrac.gronwall import gronwall_bound, picard_1d, verify_gronwall
from psifrac.psi import builtin
from psifrac.specfun import gamma, mittag_leffler

IDENTITY = builtin("identity")


def test_bound_formula():
    got = gronwall_bound(2.0, 0.5, 0.7, IDENTITY, 0.0, 1.5)
    assert got == pytest.approx(2.0 * mittag_leffler(0.7, 0.5 * gamma(0.7) * 1.5**0.7), rel=1e-15)
    arr = gronwall_bound([1.0, 1.0], 1.0, 1.0, IDENTITY, 0.0, [0.0, 1.0])
    assert np.allclose(arr, [1.0, math.e], rtol=1e-13)


def test_bound_domain_errors():
    with pytest.raises(DomainError):
        gronwall_bound(1.0, 1.0, 0.5, IDENTITY, 1.0, 0.5)
    with pytest.raises(DomainError):
        gronwall_bound(-1.0, 1.0, 0.5, IDENTITY, 0.0, 0.5)


@pytest.mark.parametrize("psi,a", [(builtin("identity"), 0.0), (builtin("log"), 1.0), (builtin("bounded"), 0.0)])
def test_fixed_point_meets_bound(psi, a):
    ts = graded_nodes(a, a + 1.0, 256)
    u = picard_1d(1.0, 1.0, 0.7, psi, ts)
    rep = verify_gronwall(u, 1.0, 1.0 / gamma(0.7), 0.7, psi, a, ts)
    assert rep.passed and rep.consistent


def test_sub_solution_is_below_bound():
    ts = graded_nodes(0.0, 1.0, 128)
    rep = verify_gronwall(np.ones_like(ts), 1.0, 1.0, 0.6, IDENTITY, 0.0, ts)
    assert rep.passed and np.all(rep.hypothesis_ok)


def test_violation_is_flagged():
    ts = graded_nodes(0.0, 1.0, 256)
    bound = gronwall_bound(1.0, 1.0, 0.7, IDENTITY, 0.0, ts)
    rep = verify_gronwall(2.0 * bound, 1.0, 1.0, 0.7, IDENTITY, 0.0, ts)
    assert not rep.passed
    assert len(rep.violations) == ts.size
    # u = 2 bound also breaks the hypothesis, so it is no counterexample
    assert rep.consistent
    d = rep.to_dict()
    assert d["passed"] is False and len(d["rows"]) == ts.size


def test_verify_input_checks():
    ts = graded_nodes(0.0, 1.0, 8)
    with pytest.raises(ValidationError):
        verify_gronwall(np.ones(8), 1.0, 1.0, 0.5, IDENTITY, 0.5, ts)
    with pytest.raises(ValidationError):
        verify_gronwall(np.full(8, np.inf), 1.0, 1.0, 0.5, IDENTITY, 0.0, ts)


def test_picard_reports_stall():
    ts = graded_nodes(0.0, 1.0, 64)
    with pytest.raises(ConvergenceError):
        picard_1d(1.0, 5.0, 0.5, IDENTITY, ts, max_iter=3)
