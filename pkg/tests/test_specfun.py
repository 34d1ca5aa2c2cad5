import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psifrac.exceptions import DomainError
from psifrac.oracle import GAMMA_TABLE
from psifrac.specfun import MLParams, gamma, mittag_leffler, mittag_leffler_array, rgamma

# E_0.5(Gamma(0.5)) from a 40-digit series summation
E_HALF_AT_GAMMA_HALF = 45.99932608938285536627405


@pytest.mark.parametrize("x", sorted(GAMMA_TABLE))
def test_gamma_matches_table(x):
    assert gamma(x) == pytest.approx(GAMMA_TABLE[x], rel=1e-14)


def test_gamma_rejects_nonpositive():
    with pytest.raises(DomainError):
        gamma(0.0)
    assert rgamma(0.0) == 0.0


def test_ml_exp_limit():
    for z in (0.0, 0.1, 1.0, 5.0, 20.0, 50.0):
        assert mittag_leffler(1.0, z) == pytest.approx(math.exp(z), rel=1e-11)


def test_ml_cosh_identity():
    # E_2(z^2) = cosh(z)
    for z in (0.5, 1.0, 3.0, 6.0):
        assert mittag_leffler(2.0, z * z) == pytest.approx(math.cosh(z), rel=1e-11)


def test_ml_half_order_erfc_identity():
    # E_1/2(z) = exp(z^2) erfc(-z)
    for z in (0.1, 0.5, 1.0, 2.0):
        assert mittag_leffler(0.5, z) == pytest.approx(math.exp(z * z) * math.erfc(-z), rel=1e-11)


def test_ml_frozen_value():
    assert mittag_leffler(0.5, gamma(0.5)) == pytest.approx(E_HALF_AT_GAMMA_HALF, rel=1e-11)


def test_ml_large_argument_uses_asymptotics():
    # past the series range the leading term exp(z^(1/alpha)) / alpha dominates
    z = 20.0
    assert mittag_leffler(0.5, z) == pytest.approx(2.0 * math.exp(z * z), rel=1e-10)
    assert mittag_leffler(0.5, 40.0) == math.inf


@settings(max_examples=60, deadline=None)
@given(st.floats(0.3, 1.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_ml_increasing_in_z(alpha, z1, z2):
    lo, hi = sorted((z1, z2))
    assert mittag_leffler(alpha, lo) <= mittag_leffler(alpha, hi) * (1 + 1e-12)


def test_ml_array_matches_scalar():
    zs = [0.0, 0.5, 2.0]
    out = mittag_leffler_array(0.7, zs)
    assert list(out) == [mittag_leffler(0.7, z) for z in zs]


@pytest.mark.parametrize("alpha,tol", [(0.0, 1e-12), (-1.0, 1e-12), (0.5, 0.0), (0.5, 1.0)])
def test_ml_parameter_validation(alpha, tol):
    with pytest.raises(DomainError):
        MLParams(alpha, 1.0, tol)
