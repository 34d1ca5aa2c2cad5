"""Closed-form fractional integrals of power profiles.

For ``delta > 0`` the order-``alpha`` integral of ``(psi(s) - psi(a))**(delta - 1)``
based at ``a`` is

    Gamma(delta) / Gamma(alpha + delta) * (psi(x) - psi(a))**(alpha + delta - 1)

and the mixed integral of a product of such profiles is the product of the
one-axis values. These formulas are the ground truth for every quadrature test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from psifrac.exceptions import DomainError
from psifrac.psi import PsiFunction
from psifrac.specfun import gamma

__all__ = [
    "PowerProfile",
    "power_integral_1d",
    "power_integral_nd",
    "unit_integral_2d",
    "GAMMA_TABLE",
    "table_gamma",
]

# Gamma at the test arguments, computed with 30-digit arithmetic and frozen
# here so oracle values do not depend on the Gamma routine under test.
GAMMA_TABLE: dict[float, float] = {
    0.25: 3.625609908221908311930685,
    0.5: 1.772453850905516027298167,
    0.6: 1.489192248812817102394333,
    0.75: 1.225416702465177645129098,
    1.0: 1.0,
    1.25: 0.9064024770554770779826713,
    1.5: 0.8862269254527580136490837,
    1.6: 0.8935153492876902614366,
    1.75: 0.9190625268488832338468237,
    2.0: 1.0,
    2.25: 1.133003096319346347478339,
    2.5: 1.329340388179137020473626,
    3.0: 2.0,
    3.25: 2.549256966718529281826263,
    3.5: 3.323350970447842551184064,
}


def table_gamma(x: float) -> float:
    """Gamma from :data:`GAMMA_TABLE`; raises ``KeyError`` for other arguments."""
    return GAMMA_TABLE[round(float(x), 12)]


@dataclass(frozen=True)
class PowerProfile:
    """The field ``prod_j (psi(x_j) - psi(0))**(delta_j - 1)``."""

    deltas: tuple[float, ...]
    psi: PsiFunction

    def __post_init__(self) -> None:
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if not self.deltas or any(not d > 0.0 for d in self.deltas):
            raise DomainError(f"power profile exponents must be > 0, got {self.deltas}")

    def __call__(self, *coords):
        out = 1.0
        base = self.psi(0.0)
        for d, c in zip(self.deltas, coords):
            out = out * (self.psi(c) - base) ** (d - 1.0)
        return out


def power_integral_1d(alpha: float, delta: float, psi: PsiFunction, a: float, x: float) -> float:
    """``I^{alpha; psi}_{a+} (psi(.) - psi(a))**(delta - 1)`` at ``x``."""
    if not alpha > 0.0 or not delta > 0.0:
        raise DomainError(f"need alpha > 0 and delta > 0, got {alpha}, {delta}")
    if x < a:
        raise DomainError(f"evaluation point {x} lies below the base point {a}")
    span = float(psi(x) - psi(a))
    return gamma(delta) / gamma(alpha + delta) * span ** (alpha + delta - 1.0)


def power_integral_nd(alphas: Sequence[float], profile: PowerProfile, eval_at: Sequence[float]) -> float:
    """Mixed integral of a power profile with base point 0 on every axis."""
    if not len(alphas) == len(profile.deltas) == len(eval_at):
        raise DomainError("orders, exponents and coordinates must have the same length")
    out = 1.0
    for alpha, delta, x in zip(alphas, profile.deltas, eval_at):
        if x < 0.0:
            raise DomainError(f"coordinates must be >= 0, got {x}")
        out *= power_integral_1d(alpha, delta, profile.psi, 0.0, x)
    return out


def unit_integral_2d(alphas: Sequence[float], psi: PsiFunction, x: float, y: float) -> float:
    """Mixed integral of ``u = 1``: ``(psi(x)-psi(0))**a1 (psi(y)-psi(0))**a2 / (Gamma(a1+1) Gamma(a2+1))``."""
    return power_integral_nd(alphas, PowerProfile((1.0, 1.0), psi), (x, y))
