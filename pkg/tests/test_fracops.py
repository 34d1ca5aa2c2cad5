import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psifrac.exceptions import ConfigError, ValidationError
from psifrac.fracops import (
    FracOrder,
    frac_integral_1d,
    frac_integral_2d,
    frac_integral_axis,
    hilfer_derivative_1d,
    hilfer_partial_2d,
    integral_matrix,
    reduce_special_case,
)
from psifrac.grid import Grid2D, graded_nodes
from psifrac.psi import builtin

IDENTITY = builtin("identity")


def test_order_gamma_rules():
    o = FracOrder(0.75, 0.5, 0.5)
    assert (o.gamma1, o.gamma2) == (0.875, 0.75)
    p = FracOrder(0.75, 0.5, 0.5, "paper")
    assert (p.gamma1, p.gamma2) == (0.625, 0.25)


@pytest.mark.parametrize("args", [(0.0, 0.5), (1.2, 0.5), (0.5, 0.5, -0.1), (0.5, 0.5, 0.5, "other")])
def test_order_validation(args):
    with pytest.raises(ConfigError):
        FracOrder(*args)


def test_darboux_needs_orders_above_half():
    with pytest.raises(ConfigError):
        FracOrder(0.5, 0.9).require_darboux()
    FracOrder(0.51, 0.9).require_darboux()


def test_integral_matrix_is_lower_triangular():
    W = integral_matrix(np.linspace(0, 1, 20), 0.6)
    assert np.allclose(W, np.tril(W)) and np.all(W >= 0)
    assert np.array_equal(integral_matrix(np.linspace(0, 1, 5), 0.0), np.eye(5))
    with pytest.raises(ValidationError):
        integral_matrix([0.0, 0.5, 0.5], 0.6)


def test_order_one_is_exact_for_linear_integrands():
    xs = graded_nodes(0.0, 2.0, 33)
    assert np.allclose(frac_integral_1d(1 + 3 * xs, IDENTITY, 1.0, 0.0, xs), xs + 1.5 * xs**2, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 0.9), st.floats(0.2, 0.9))
def test_semigroup(a, b):
    # I^a I^b f = I^(a+b) f for f = 1 + t
    xs = graded_nodes(0.0, 1.0, 400)
    f = 1.0 + xs
    lhs = frac_integral_1d(frac_integral_1d(f, IDENTITY, b, 0.0, xs), IDENTITY, a, 0.0, xs)
    rhs = frac_integral_1d(f, IDENTITY, a + b, 0.0, xs)
    # the composed integrand behaves like t^b near the base point; compare away from it
    assert np.max(np.abs(lhs - rhs)[xs >= 0.05]) < 1e-4


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 1.0), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(alpha, c1, c2):
    xs = graded_nodes(0.0, 1.0, 64)
    f, g = np.sin(xs), xs**2
    lhs = frac_integral_1d(c1 * f + c2 * g, IDENTITY, alpha, 0.0, xs)
    rhs = c1 * frac_integral_1d(f, IDENTITY, alpha, 0.0, xs) + c2 * frac_integral_1d(g, IDENTITY, alpha, 0.0, xs)
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_callable_and_sample_paths_agree():
    xs = graded_nodes(0.0, 1.0, 1024)
    a = frac_integral_1d(np.cos, IDENTITY, 0.7, 0.0, [0.5, 1.0])
    b = frac_integral_1d(np.cos(xs), IDENTITY, 0.7, 0.0, xs)[-1]
    assert a[-1] == pytest.approx(b, rel=1e-6)


def test_sampled_input_must_start_at_base():
    with pytest.raises(ValidationError):
        frac_integral_1d(np.ones(3), IDENTITY, 0.5, 0.0, [0.1, 0.5, 1.0])
    with pytest.raises(ValidationError):
        frac_integral_1d(np.ones, IDENTITY, 0.5, 0.5, [0.1, 1.0])


def test_integration_order_does_not_matter():
    g = Grid2D(1.0, 1.0, 40, 30)
    u = g.sample(lambda x, y: np.exp(x) * np.cos(y))
    a = frac_integral_2d(u, IDENTITY, (0.6, 0.8), inner="x").values
    b = frac_integral_2d(u, IDENTITY, (0.6, 0.8), inner="y").values
    assert np.allclose(a, b, atol=1e-14)
    c = frac_integral_axis(frac_integral_axis(u, IDENTITY, 0.6, 0), IDENTITY, 0.8, 1).values
    assert np.allclose(a, c, atol=1e-14)


def test_callable_2d_integral():
    psi = builtin("power", [2.0])
    got = frac_integral_2d(lambda x, y: np.ones_like(x), psi, (0.7, 0.9), (0.8, 0.6))
    ref = float(0.64**0.7 * 0.36**0.9 / (mp.gamma(1.7) * mp.gamma(1.9)))
    assert got == pytest.approx(ref, rel=1e-12)
    assert frac_integral_2d(lambda x, y: x, psi, (0.7, 0.9), (0.0, 0.6)) == 0.0


@pytest.mark.parametrize("psi", [builtin("identity"), builtin("power", [2.0]), builtin("bounded")])
@pytest.mark.parametrize("alpha,beta", [(0.6, 0.0), (0.8, 0.5), (0.7, 1.0)])
def test_hilfer_1d_on_power_functions(psi, alpha, beta):
    # D (psi - psi(0))^(d-1) = Gamma(d) / Gamma(d - alpha) (psi - psi(0))^(d - alpha - 1)
    d = 3.0
    xs = graded_nodes(0.0, 1.0, 512)
    w = psi(xs)
    got = hilfer_derivative_1d(w ** (d - 1), psi, alpha, beta, xs)
    ref = float(mp.gamma(d) / mp.gamma(d - alpha)) * w ** (d - alpha - 1)
    assert np.max(np.abs(got - ref)[xs >= 0.25]) < 1e-3


def test_derivative_needs_enough_nodes():
    xs = np.linspace(0, 1, 10)
    with pytest.raises(ValidationError):
        hilfer_derivative_1d(xs, IDENTITY, 0.5, 0.5, xs)
    with pytest.raises(ValidationError):
        hilfer_partial_2d(Grid2D(1, 1, 16, 64).sample(lambda x, y: x), IDENTITY, FracOrder(0.5, 0.5))


def test_unknown_special_case():
    with pytest.raises(ConfigError):
        reduce_special_case("grunwald")
