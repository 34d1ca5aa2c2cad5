import math

import numpy as np
import pytest

from psifrac.darboux import DarbouxProblem, picard_solve
from psifrac.exceptions import ConfigError, ValidationError
from psifrac.fracops import FracOrder
from psifrac.grid import Grid2D
from psifrac.psi import builtin
from psifrac.specfun import gamma, mittag_leffler
from psifrac.stability import (
    Perturbation,
    RassiasWeight,
    build_perturbed,
    random_perturbations,
    te_residuals,
    uh_certify,
    uh_constants,
    uhr_certify,
    uhr_constants,
    uhr_lambda_certify,
    worker_count,
)

IDENTITY = builtin("identity")
BOUNDED = builtin("bounded")
GRID = Grid2D(1.0, 1.0, 48, 48)


def test_perturbations_respect_bound_and_seed():
    a = random_perturbations("uh", GRID, 4, seed=3, epsilon=0.1)
    b = random_perturbations("uh", GRID, 4, seed=3, epsilon=0.1)
    assert [p.source for p in a] == [p.source for p in b]
    assert len({p.source for p in a}) == 4
    fine = Grid2D(1.0, 1.0, 200, 200, grading=1.0)
    for p in a:
        p.check(GRID)
        assert np.max(np.abs(p.sample(fine))) <= 0.1 * (1 + 1e-6)


def test_weighted_perturbations():
    w = RassiasWeight("1 + x + y")
    for p in random_perturbations("uhr", GRID, 3, seed=1, weight=w):
        p.check(GRID)
    for p in random_perturbations("uhr_eps", GRID, 3, seed=1, weight=w, epsilon=0.5):
        assert np.all(np.abs(p.sample(GRID)) <= 0.5 * w.sample(GRID))


def test_perturbation_check_raises():
    with pytest.raises(ValidationError):
        Perturbation("0.2", "uh", 0.1).check(GRID)
    with pytest.raises(ConfigError):
        Perturbation("0", "uh")
    with pytest.raises(ConfigError):
        Perturbation("0", "uhr", 0.1)


def test_uh_constants_fractional_formula():
    o = FracOrder(0.75, 0.6, 0.5)
    c1, c2, c3 = uh_constants(2.0, IDENTITY, o, 1.0, 1.0)
    assert c2 == pytest.approx(1 / gamma(1.6) * mittag_leffler(0.6, 2.0 * gamma(0.6)), rel=1e-14)
    assert c3 == pytest.approx(1 / gamma(1.75) * mittag_leffler(0.75, 2.0 * gamma(0.75)), rel=1e-14)
    lo = uh_constants(2.0, IDENTITY, o, 1.0, 1.0, "min")[0]
    hi = uh_constants(2.0, IDENTITY, o, 1.0, 1.0, "max")[0]
    assert lo > hi  # smaller order, faster growth
    assert uh_constants(2.0, IDENTITY, o, 1.0, 1.0, "axis")[0] == hi
    with pytest.raises(ConfigError):
        uh_constants(2.0, IDENTITY, o, 1.0, 1.0, "mean")


def test_uhr_constant_index_switch():
    o = FracOrder(0.75, 0.6)
    paper = uhr_constants((1.0, 2.0, 3.0), 0.5, 1.0, 0.0, o, c2c3="paper")
    swapped = uhr_constants((1.0, 2.0, 3.0), 0.5, 1.0, 0.0, o, c2c3="swapped")
    assert paper[0] == swapped[0]
    assert paper[1] / 2 == pytest.approx(swapped[2] / 3) and paper[2] / 3 == pytest.approx(swapped[1] / 2)
    with pytest.raises(ConfigError):
        uhr_constants((1, 1, 1), 0.5, math.inf, 0.0, o)


def test_lambda_certificate():
    cert = uhr_lambda_certify(RassiasWeight("1"), IDENTITY, FracOrder(1.0, 1.0), GRID)
    assert cert.certified and np.allclose(cert.lambdas, 1.0)
    dec = uhr_lambda_certify(RassiasWeight("2 - x"), IDENTITY, FracOrder(1.0, 1.0), GRID)
    assert not dec.certified and "increasing" in dec.reason
    small = uhr_lambda_certify(RassiasWeight("1 + x", (0.1, 0.1, 0.1)), IDENTITY, FracOrder(1.0, 1.0), GRID)
    assert not small.certified
    with pytest.raises(ValidationError):
        uhr_lambda_certify(RassiasWeight("x"), IDENTITY, FracOrder(1.0, 1.0), GRID)


def test_te_margins_nonnegative_for_perturbed_solution():
    p = DarbouxProblem("u", FracOrder(1.0, 1.0), IDENTITY, 1.0, 1.0)
    pert = random_perturbations("uh", GRID, 1, seed=5, epsilon=0.05)[0]
    v, log = build_perturbed(p, pert, GRID, 1e-12, 200)
    assert log.converged
    assert min(te_residuals(v, p, "uh", epsilon=0.05).worst) > -1e-9


def test_uh_certificate_classical():
    p = DarbouxProblem("u", FracOrder(1.0, 1.0), IDENTITY, 1.0, 1.0)
    rep = uh_certify(p, 0.1, random_perturbations("uh", GRID, 4, seed=2, epsilon=0.1), GRID)
    assert rep.passed and rep.failures == []
    assert all(g <= 0.1 * math.e for g in rep.max_gaps())
    d = rep.to_dict()
    assert d["constants"]["C1"] == pytest.approx(math.e) and len(d["draws"]) == 4


def test_uh_certificate_fails_for_oversized_source():
    # a source ten times larger than declared must break the certificate
    p = DarbouxProblem("u", FracOrder(1.0, 1.0), IDENTITY, 1.0, 1.0)
    big = Perturbation("1", "uh", 0.1)
    with pytest.raises(ValidationError):
        uh_certify(p, 0.1, [big], GRID)


def test_uhr_certificate_refuses_unbounded_psi():
    p = DarbouxProblem("u/2", FracOrder(0.75, 0.75, 0.5), IDENTITY, 1.0, 1.0, Lf=0.5)
    w = RassiasWeight("1 + x + y")
    with pytest.raises(ConfigError):
        uhr_certify(p, w, random_perturbations("uhr", GRID, 1, seed=0, weight=w), GRID)


def test_uhr_certificate_bounded_psi():
    p = DarbouxProblem("u/2", FracOrder(0.75, 0.75, 0.5), BOUNDED, 1.0, 1.0, Lf=0.5)
    w = RassiasWeight("1 + x + y")
    rep = uhr_certify(p, w, random_perturbations("uhr", GRID, 2, seed=0, weight=w), GRID)
    assert rep.passed
    assert set(rep.to_dict()["constants_alternate"]) == {"paper", "swapped"}


def test_worker_count(monkeypatch):
    monkeypatch.setenv("PSIFRAC_THREADS", "1")
    assert worker_count(10) == 1
    monkeypatch.setenv("PSIFRAC_THREADS", "0")
    assert 1 <= worker_count(3) <= 3


def test_unperturbed_solution_is_reference():
    p = DarbouxProblem("u", FracOrder(1.0, 1.0), IDENTITY, 1.0, 1.0, phi="1", xi="1")
    u, _ = picard_solve(p, GRID)
    v, _ = build_perturbed(p, Perturbation("0", "uh", 0.1), GRID, 1e-10, 200)
    assert np.allclose(u.u.values, v.u.values)
