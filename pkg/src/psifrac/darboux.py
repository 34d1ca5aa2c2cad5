"""Picard solver for the hyperbolic psi-Hilfer Darboux problem.

The problem ``D^{(a1, a2), beta; psi} u = f(x, y, u, u1, u2)`` on
``[0, a] x [0, b]`` with traces ``phi`` on ``y = 0`` and ``xi`` on ``x = 0`` is
solved through its equivalent fixed-point system

    u  = Wy(y) phi(x) + Wx(x) xi(y) - phi(0) + I^{(a1, a2); psi} F
    u1 = Wy(y) phi1(x)                       + I^{a2; psi}_{y} F
    u2 = Wx(x) xi(y)                         + I^{a1; psi}_{x} F

where ``F = f(x, y, u, u1, u2)`` and ``Wy(y) = (psi(y) - psi(0))**(g2 - 1) / Gamma(g2)``
(likewise ``Wx`` with ``g1``). The map is a contraction in the weighted norm
``max |.| exp(-tau (x + y))`` whenever ``Lf / tau < 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from psifrac.exceptions import ConfigError, ContractionError, ValidationError
from psifrac.exprdsl import RHS_VARS, as_function
from psifrac.fracops import FracOrder, bielecki_sup, integral_matrix
from psifrac.grid import Grid2D, GridFn
from psifrac.psi import PsiFunction
from psifrac.specfun import gamma

__all__ = [
    "DarbouxProblem",
    "GridTriple",
    "IterationLog",
    "ResidualReport",
    "picard_solve",
    "residual",
    "trace_weight",
]


def _source(fn) -> str | None:
    expr = getattr(fn, "expr", None)
    return None if expr is None else (expr.source or expr.render())


@dataclass(frozen=True)
class DarbouxProblem:
    """Right-hand side, orders, weight function, domain and traces.

    ``f``, ``phi``, ``xi`` and ``phi1`` accept expression strings, numbers or
    vectorised callables. ``phi1`` is the trace weight of the ``u1`` row and
    defaults to ``phi``. ``tau`` defaults to ``4 Lf``.
    """

    f: Callable
    order: FracOrder
    psi: PsiFunction
    a: float
    b: float
    phi: Callable = 0.0
    xi: Callable = 0.0
    Lf: float = 1.0
    tau: float | None = None
    phi1: Callable | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "f", as_function(self.f, RHS_VARS))
        object.__setattr__(self, "phi", as_function(self.phi, ("x",)))
        object.__setattr__(self, "xi", as_function(self.xi, ("y",)))
        phi1 = self.phi if self.phi1 is None else as_function(self.phi1, ("x",))
        object.__setattr__(self, "phi1", phi1)
        if not (self.a > 0 and self.b > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise ConfigError(f"domain extents must be finite and positive, got a={self.a}, b={self.b}")
        if not self.Lf > 0:
            raise ConfigError(f"Lf must be > 0, got {self.Lf}")
        if self.tau is None:
            object.__setattr__(self, "tau", 4.0 * self.Lf)
        if not self.tau > 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.contraction >= 1.0:
            raise ContractionError(
                f"Lf/tau = {self.contraction:.4g} >= 1: the Picard map is not a contraction"
            )
        self.order.require_darboux()
        self.psi.check_base(0.0)
        if not (self.psi.contains(self.a) and self.psi.contains(self.b)):
            raise ConfigError(f"domain [0, {self.a}] x [0, {self.b}] leaves the domain of psi")

    @property
    def contraction(self) -> float:
        return self.Lf / self.tau

    def with_rhs(self, f) -> "DarbouxProblem":
        """Copy of the problem with a different right-hand side."""
        return DarbouxProblem(
            f, self.order, self.psi, self.a, self.b, self.phi, self.xi, self.Lf, self.tau, self.phi1
        )

    def to_config(self) -> dict:
        return {
            "f": _source(self.f),
            "phi": _source(self.phi),
            "xi": _source(self.xi),
            "phi1": _source(self.phi1),
            "order": self.order.to_config(),
            "psi": self.psi.to_config(),
            "a": self.a,
            "b": self.b,
            "Lf": self.Lf,
            "tau": self.tau,
        }


@dataclass(frozen=True)
class GridTriple:
    """``u`` and its two fractional partial derivatives on a shared grid."""

    u: GridFn
    u1: GridFn
    u2: GridFn

    def __post_init__(self) -> None:
        if not (self.u.grid is self.u1.grid is self.u2.grid):
            if not (self.u.grid == self.u1.grid == self.u2.grid):
                raise ValidationError("components of a GridTriple must share one grid")

    @property
    def grid(self) -> Grid2D:
        return self.u.grid

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.u.values, self.u1.values, self.u2.values

    @classmethod
    def from_arrays(cls, grid: Grid2D, u, u1, u2) -> "GridTriple":
        return cls(GridFn(grid, u), GridFn(grid, u1), GridFn(grid, u2))


@dataclass
class IterationLog:
    """Weighted distance between consecutive Picard iterates."""

    tau: float
    contraction: float
    tol: float
    entries: list = field(default_factory=list)
    converged: bool = False
    extrapolated_boundary: bool = False

    @property
    def iterations(self) -> int:
        return len(self.entries)

    @property
    def distances(self) -> list[float]:
        return [e["distance"] for e in self.entries]

    @property
    def final_distance(self) -> float:
        return self.entries[-1]["distance"] if self.entries else math.inf

    def record(self, distance: float, sup_distance: float) -> None:
        prev = self.entries[-1]["distance"] if self.entries else None
        ratio = None if not prev else distance / prev
        self.entries.append(
            {
                "iteration": len(self.entries) + 1,
                "distance": distance,
                "sup_distance": sup_distance,
                "ratio": ratio,
            }
        )

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "contraction": self.contraction,
            "tol": self.tol,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_distance": self.final_distance,
            "extrapolated_boundary": self.extrapolated_boundary,
            "entries": self.entries,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def trace_weight(psi: PsiFunction, nodes: np.ndarray, g: float) -> tuple[np.ndarray, bool]:
    """``(psi(t) - psi(0))**(g - 1) / Gamma(g)`` on ``nodes``.

    For ``g < 1`` the weight is infinite at ``t = 0``; that node takes the value
    of the first interior node and the second return value is true.
    """
    if g >= 1.0:
        return np.ones_like(nodes), False
    span = np.asarray(psi(nodes) - psi(0.0), dtype=float)
    with np.errstate(divide="ignore"):
        w = span ** (g - 1.0) / gamma(g)
    w[span <= 0.0] = w[np.argmax(span > 0.0)]
    return w, True


class _FixedPointMap:
    """The three-row map on a fixed grid, with an optional additive source ``g``."""

    def __init__(self, p: DarbouxProblem, grid: Grid2D, g: np.ndarray | None = None):
        if grid.x0 != 0.0 or grid.y0 != 0.0:
            raise ValidationError("the Darboux grid must start at the origin")
        if not (math.isclose(grid.a, p.a) and math.isclose(grid.b, p.b)):
            raise ValidationError(f"grid covers [0,{grid.a}]x[0,{grid.b}], problem needs [0,{p.a}]x[0,{p.b}]")
        self.p, self.grid = p, grid
        self.X, self.Y = grid.mesh()
        psi = p.psi
        self.W1 = integral_matrix(psi(grid.x), p.order.alpha1)
        self.W2 = integral_matrix(psi(grid.y), p.order.alpha2)
        wx, fx = trace_weight(psi, grid.x, p.order.gamma1)
        wy, fy = trace_weight(psi, grid.y, p.order.gamma2)
        self.extrapolated = fx or fy
        phi = np.broadcast_to(p.phi(grid.x), grid.x.shape)
        phi1 = np.broadcast_to(p.phi1(grid.x), grid.x.shape)
        xi = np.broadcast_to(p.xi(grid.y), grid.y.shape)
        phi0 = float(np.asarray(p.phi(np.array([0.0])))[0])
        self.T = np.outer(phi, wy) + np.outer(wx, xi) - phi0
        self.T1 = np.outer(phi1, wy)
        self.T2 = np.outer(wx, xi)
        self.g = None if g is None else np.broadcast_to(np.asarray(g, dtype=float), grid.shape)
        for name, arr in (("trace", self.T), ("trace", self.T1), ("trace", self.T2)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} terms are not finite on the grid")

    def traces(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.T.copy(), self.T1.copy(), self.T2.copy()

    def rhs(self, u, u1, u2) -> np.ndarray:
        F = np.broadcast_to(self.p.f(self.X, self.Y, u, u1, u2), self.grid.shape)
        if self.g is not None:
            F = F + self.g
        if not np.all(np.isfinite(F)):
            raise ValidationError("right-hand side is not finite on the grid")
        return F

    def __call__(self, u, u1, u2):
        F = self.rhs(u, u1, u2)
        IyF = F @ self.W2.T
        return (
            self.T + self.W1 @ IyF,
            self.T1 + IyF,
            self.T2 + self.W1 @ F,
        )


def _distance(new, old, grid: Grid2D, tau: float) -> tuple[float, float]:
    weighted = max(bielecki_sup(n - o, grid, tau) for n, o in zip(new, old))
    plain = max(float(np.max(np.abs(n - o))) for n, o in zip(new, old))
    return weighted, plain


def picard_solve(
    p: DarbouxProblem,
    grid: Grid2D,
    tol: float = 1.0e-10,
    max_iter: int = 200,
    *,
    init: str | GridTriple = "traces",
    g=None,
) -> tuple[GridTriple, IterationLog]:
    """Iterate the fixed-point map until the weighted step is below ``tol``.

    ``init`` is ``"traces"`` (source term zero), ``"zero"`` or an explicit
    :class:`GridTriple`. ``g`` is an optional additive source sampled on the
    grid (used for perturbed problems). Exhausting ``max_iter`` is not an
    error: the log reports ``converged = False`` and the last distance.
    """
    if not tol > 0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {max_iter}")
    A = _FixedPointMap(p, grid, g)
    if isinstance(init, GridTriple):
        cur = tuple(a.copy() for a in init.arrays())
    elif init == "traces":
        cur = A.traces()
    elif init == "zero":
        cur = tuple(np.zeros(grid.shape) for _ in range(3))
    else:
        raise ConfigError(f"init must be 'traces', 'zero' or a GridTriple, got {init!r}")
    log = IterationLog(p.tau, p.contraction, tol, extrapolated_boundary=A.extrapolated)
    for _ in range(max_iter):
        nxt = A(*cur)
        weighted, plain = _distance(nxt, cur, grid, p.tau)
        log.record(weighted, plain)
        cur = nxt
        if weighted < tol:
            log.converged = True
            break
    return GridTriple.from_arrays(grid, *cur), log


@dataclass(frozen=True)
class ResidualReport:
    """Distance between a candidate solution and its image under the map.

    ``r_*`` are plain sup norms, ``weighted`` is the largest weighted norm.
    ``bound`` is the a-posteriori level ``tol (1 + q) / (1 - q)`` with
    ``q = Lf / tau`` that a converged solve meets in the weighted norm.
    """

    r_u: float
    r_u1: float
    r_u2: float
    weighted: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.weighted <= self.bound

    def to_dict(self) -> dict:
        return {
            "r_u": self.r_u,
            "r_u1": self.r_u1,
            "r_u2": self.r_u2,
            "weighted": self.weighted,
            "bound": self.bound,
            "within_bound": self.within_bound,
        }


def residual(p: DarbouxProblem, sol: GridTriple, tol: float = 1.0e-10, *, g=None) -> ResidualReport:
    """Apply the map once more to ``sol`` and measure the change per component."""
    A = _FixedPointMap(p, sol.grid, g)
    cur = sol.arrays()
    nxt = A(*cur)
    r = [float(np.max(np.abs(n - c))) for n, c in zip(nxt, cur)]
    weighted = max(bielecki_sup(n - c, sol.grid, p.tau) for n, c in zip(nxt, cur))
    q = p.contraction
    return ResidualReport(r[0], r[1], r[2], weighted, tol * (1.0 + q) / (1.0 - q))
