"""Admissible weight functions psi and their derivatives.

A weight function must be strictly increasing with a continuous, positive
derivative on the open domain. Builtins cover the classical special cases:

=========  ===================  ==============================================
name       psi(t)               notes
=========  ===================  ==============================================
identity   t                    Riemann-Liouville operators
log        ln t                 Hadamard operators, base point must be > 0
power      t**rho               rho > 0
bounded    t / (1 + t)          sup psi = 1, needed by the Rassias constants
=========  ===================  ==============================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from psifrac.exceptions import ConfigError, ValidationError
from psifrac.exprdsl import Expr, evaluate, parse

__all__ = [
    "PsiFunction",
    "ValidationReport",
    "builtin",
    "from_expr",
    "validate",
    "from_config",
    "BUILTINS",
]

BUILTINS = ("identity", "log", "power", "bounded")

# finite proxy used when sampling on an unbounded domain
_SAMPLE_SPAN = 10.0


@dataclass(frozen=True)
class PsiFunction:
    """An increasing weight function with its derivative.

    ``value`` and ``derivative`` are vectorised callables. ``sup`` is the
    finite supremum of ``value`` over the domain when it is known (``None``
    for unbounded weights).
    """

    value: Callable = field(repr=False)
    derivative: Callable = field(repr=False)
    domain: tuple[float, float] = (0.0, math.inf)
    label: str = "psi"
    lo_open: bool = False
    sup: float | None = None
    params: tuple = ()
    spec: dict = field(default_factory=dict, compare=False, repr=False)

    def __call__(self, t):
        return self.value(np.asarray(t, dtype=float))

    def d(self, t):
        return self.derivative(np.asarray(t, dtype=float))

    def contains(self, t) -> bool:
        lo, hi = self.domain
        t = np.asarray(t, dtype=float)
        lower = t > lo if self.lo_open else t >= lo
        return bool(np.all(lower & (t <= hi)))

    def check_base(self, base: float) -> None:
        """Reject base points where ``psi`` is not finite (e.g. ``ln 0``)."""
        lo, _ = self.domain
        if base < lo or (self.lo_open and base == lo and not np.isfinite(self(base))):
            raise ConfigError(
                f"base point {base} is outside the domain {self.domain} of psi={self.label}"
            )

    def to_config(self) -> dict:
        lo, hi = self.domain
        out = dict(self.spec) or {"kind": "builtin", "name": self.label.split("(")[0]}
        out["domain"] = [lo, hi if math.isfinite(hi) else "inf"]
        if self.sup is not None:
            out["sup"] = self.sup
        return out


@dataclass(frozen=True)
class ValidationReport:
    label: str
    n: int
    min_derivative: float
    monotonicity_violations: tuple
    max_relative_jump: float
    passed: bool

    def __bool__(self) -> bool:
        return self.passed


def builtin(name: str, params: Sequence[float] = (), domain: tuple[float, float] | None = None) -> PsiFunction:
    """Construct one of the builtin weight functions.

    >>> builtin("identity")(2.0)
    array(2.)
    """
    params = tuple(float(p) for p in params)
    p = _builtin(name, params, domain)
    spec = {"kind": "builtin", "name": name}
    if params:
        spec["params"] = list(params)
    return replace(p, spec=spec)


def _builtin(name: str, params: tuple, domain) -> PsiFunction:
    if name == "identity":
        lo, hi = domain or (0.0, math.inf)
        return PsiFunction(
            lambda t: t + 0.0, lambda t: np.ones_like(t), (lo, hi), "identity"
        )
    if name == "log":
        lo, hi = domain or (1.0, math.inf)
        if lo <= 0.0:
            raise ConfigError(
                "log weight needs a strictly positive lower endpoint (ln 0 is -inf); "
                f"got domain {(lo, hi)}"
            )
        return PsiFunction(np.log, lambda t: 1.0 / t, (lo, hi), "log")
    if name == "power":
        if len(params) != 1 or not params[0] > 0.0:
            raise ConfigError(f"power weight takes one exponent rho > 0, got {params}")
        (rho,) = params
        lo, hi = domain or (0.0, math.inf)

        def deriv(t, rho=rho):
            with np.errstate(divide="ignore"):
                return rho * np.power(t, rho - 1.0)

        return PsiFunction(
            lambda t, rho=rho: np.power(t, rho),
            deriv,
            (lo, hi),
            f"power({rho:g})",
            lo_open=(lo == 0.0 and rho != 1.0),
            params=(rho,),
        )
    if name == "bounded":
        lo, hi = domain or (0.0, math.inf)
        return PsiFunction(
            lambda t: t / (1.0 + t),
            lambda t: 1.0 / (1.0 + t) ** 2,
            (lo, hi),
            "bounded",
            sup=1.0 if math.isinf(hi) else hi / (1.0 + hi),
        )
    raise ConfigError(f"unknown builtin psi {name!r}; expected one of {BUILTINS}")


def _sample_points(p: PsiFunction, n: int) -> np.ndarray:
    lo, hi = p.domain
    top = hi if math.isfinite(hi) else lo + _SAMPLE_SPAN
    t = np.linspace(lo, top, n)
    if p.lo_open:
        t[0] = lo + 1.0e-3 * (t[1] - t[0])
    return t


def validate(p: PsiFunction, n: int = 1024) -> ValidationReport:
    """Sample ``psi`` and ``psi'`` on ``n`` points and check admissibility.

    Passes iff the smallest sampled derivative is positive and ``psi`` is
    strictly increasing between every pair of neighbouring samples. The
    largest relative jump of ``psi'`` between neighbours is reported as a
    continuity diagnostic.
    """
    if n < 16:
        raise ValueError(f"validation needs at least 16 samples, got {n}")
    t = _sample_points(p, n)
    with np.errstate(all="ignore"):
        v = np.asarray(p(t), dtype=float)
        dv = np.asarray(p.d(t), dtype=float)
    bad = np.flatnonzero(~(np.diff(v) > 0))
    finite = np.isfinite(dv)
    min_d = float(np.min(dv[finite])) if np.any(finite) else math.nan
    scale = np.maximum(np.abs(dv[:-1]), 1.0e-300)
    with np.errstate(all="ignore"):
        jumps = np.abs(np.diff(dv)) / scale
    jumps = jumps[np.isfinite(jumps)]
    max_jump = float(np.max(jumps)) if jumps.size else math.nan
    passed = bool(np.all(finite) and min_d > 0.0 and bad.size == 0)
    return ValidationReport(p.label, n, min_d, tuple(int(i) for i in bad), max_jump, passed)


def _central_difference(fn: Callable, lo: float, hi: float) -> Callable:
    def deriv(t):
        t = np.asarray(t, dtype=float)
        h = np.maximum(1.0e-6, 1.0e-6 * np.abs(t))
        left = np.maximum(t - h, lo)
        right = np.minimum(t + h, hi)
        return (fn(right) - fn(left)) / (right - left)

    return deriv


def from_expr(
    e: Expr | str,
    domain: tuple[float, float],
    derivative: Expr | str | None = None,
    *,
    check: bool = True,
    n: int = 1024,
) -> PsiFunction:
    """Build a weight function from an expression in ``t``.

    Without an explicit ``derivative`` expression, ``psi'`` is a central
    difference with step ``max(1e-6, 1e-6 |t|)``, one-sided at the domain
    ends.

    :raises ValidationError: the sampled function is not admissible (only
        when ``check`` is true).
    """
    if isinstance(e, str):
        e = parse(e, ("t",))
    if isinstance(derivative, str):
        derivative = parse(derivative, ("t",))
    lo, hi = (float(domain[0]), float(domain[1]))
    if not lo < hi:
        raise ConfigError(f"empty psi domain {domain}")

    expr = e

    def value(t):
        return np.asarray(evaluate(expr, {"t": t}), dtype=float)

    if derivative is not None:
        dexpr = derivative

        def deriv(t):
            return np.broadcast_to(evaluate(dexpr, {"t": t}), np.shape(t)).astype(float)

    else:
        deriv = _central_difference(value, lo, hi)

    spec = {"kind": "expr", "value": e.source or e.render()}
    if derivative is not None:
        spec["derivative"] = derivative.source or derivative.render()
    p = PsiFunction(value, deriv, (lo, hi), f"expr:{spec['value']}", spec=spec)
    if check:
        report = validate(p, n)
        if not report.passed:
            raise ValidationError(
                f"psi={e.source or e.render()} is not admissible on {domain}: "
                f"min psi'={report.min_derivative:.3g}, "
                f"{len(report.monotonicity_violations)} monotonicity violation(s)"
            )
    return p


def _domain_from_config(raw) -> tuple[float, float] | None:
    if raw is None:
        return None
    lo, hi = raw
    return float(lo), (math.inf if hi in ("inf", "Infinity", None) else float(hi))


def from_config(cfg: dict) -> PsiFunction:
    """Build a weight function from its JSON config block.

    ``{"kind": "builtin", "name": "power", "params": [2]}`` or
    ``{"kind": "expr", "value": "t^3 + t", "derivative": "3*t^2 + 1", "domain": [0, 2]}``.
    """
    if isinstance(cfg, str):
        cfg = {"kind": "builtin", "name": cfg}
    kind = cfg.get("kind", "builtin")
    domain = _domain_from_config(cfg.get("domain"))
    if kind == "builtin":
        p = builtin(cfg["name"], cfg.get("params", ()), domain)
    elif kind == "expr":
        if domain is None:
            raise ConfigError("expression psi needs an explicit domain")
        p = from_expr(cfg["value"], domain, cfg.get("derivative"))
    else:
        raise ConfigError(f"psi kind must be 'builtin' or 'expr', got {kind!r}")
    if cfg.get("sup") is not None:
        # user-declared supremum of a bounded expression weight
        p = replace(p, sup=float(cfg["sup"]))
    return p
