"""Ulam-Hyers and Ulam-Hyers-Rassias certificates for the Darboux problem.

A perturbed solution ``v`` solves the problem with ``f`` replaced by ``f + g``
where ``|g|`` is bounded by ``epsilon`` (mode ``uh``), by a weight ``phi_w``
(``uhr``) or by ``epsilon * phi_w`` (``uhr_eps``). The exact solution ``u``
with the same traces is computed once, and the sampled gaps
``|v - u|``, ``|v1 - u1|``, ``|v2 - u2|`` are compared with the stability
constants times the perturbation size, plus a numerical slack of
``SLACK_FACTOR * (solver error + quadrature error)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from psifrac.darboux import DarbouxProblem, GridTriple, IterationLog, picard_solve
from psifrac.exceptions import ConfigError, ConvergenceError, ValidationError
from psifrac.exprdsl import as_function, parse
from psifrac.fracops import FracOrder, integral_matrix
from psifrac.grid import Grid2D
from psifrac.psi import PsiFunction
from psifrac.specfun import gamma, mittag_leffler

__all__ = [
    "MODES",
    "ML_ORDERS",
    "C2C3_INDICES",
    "SLACK_FACTOR",
    "Perturbation",
    "RassiasWeight",
    "LambdaCertificate",
    "TeMargins",
    "DrawResult",
    "StabilityReport",
    "uh_constants",
    "uhr_constants",
    "random_perturbation",
    "random_perturbations",
    "build_perturbed",
    "te_residuals",
    "uh_certify",
    "uhr_lambda_certify",
    "uhr_certify",
    "worker_count",
]

MODES = ("uh", "uhr", "uhr_eps")
ML_ORDERS = ("min", "max", "axis")
C2C3_INDICES = ("paper", "swapped")
SLACK_FACTOR = 10.0
LAMBDA_CAP = 1.0e6

# relative safety factor applied when scaling random perturbations to their bound
_SCALE_SAFETY = 1.0 - 1.0e-12


def worker_count(jobs: int) -> int:
    """Thread count for batch runs: ``PSIFRAC_THREADS`` (0 or unset means automatic)."""
    raw = os.environ.get("PSIFRAC_THREADS", "0").strip() or "0"
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"PSIFRAC_THREADS must be an integer, got {raw!r}") from exc
    if cap < 0:
        raise ConfigError(f"PSIFRAC_THREADS must be >= 0, got {cap}")
    auto = os.cpu_count() or 1
    return max(1, min(jobs, cap if cap > 0 else auto))


# -- perturbations and weights ----------------------------------------------


def _source(fn) -> str | None:
    expr = getattr(fn, "expr", None)
    return None if expr is None else (expr.source or expr.render())


@dataclass(frozen=True)
class RassiasWeight:
    """Positive weight ``phi_w(x, y)`` with optional user-supplied lambdas."""

    phi_w: Callable
    lambdas: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi_w", as_function(self.phi_w, ("x", "y")))
        if self.lambdas is not None:
            lam = tuple(float(v) for v in self.lambdas)
            if len(lam) != 3 or any(v < 0 for v in lam):
                raise ConfigError(f"lambdas must be three nonnegative numbers, got {self.lambdas}")
            object.__setattr__(self, "lambdas", lam)

    def sample(self, grid: Grid2D) -> np.ndarray:
        X, Y = grid.mesh()
        return np.broadcast_to(self.phi_w(X, Y), grid.shape).astype(float)

    @property
    def source(self) -> str | None:
        return _source(self.phi_w)


@dataclass(frozen=True)
class Perturbation:
    """Additive source ``g(x, y)`` and the bound it must respect."""

    g: Callable
    mode: str = "uh"
    epsilon: float | None = None
    weight: RassiasWeight | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "g", as_function(self.g, ("x", "y")))
        if self.mode not in MODES:
            raise ConfigError(f"perturbation mode must be one of {MODES}, got {self.mode!r}")
        if self.mode in ("uh", "uhr_eps") and not (self.epsilon is not None and self.epsilon > 0):
            raise ConfigError(f"mode {self.mode} needs epsilon > 0")
        if self.mode in ("uhr", "uhr_eps") and self.weight is None:
            raise ConfigError(f"mode {self.mode} needs a Rassias weight")

    @property
    def source(self) -> str | None:
        return _source(self.g)

    def bound(self, grid: Grid2D) -> np.ndarray:
        if self.mode == "uh":
            return np.full(grid.shape, float(self.epsilon))
        w = self.weight.sample(grid)
        return w if self.mode == "uhr" else self.epsilon * w

    def sample(self, grid: Grid2D) -> np.ndarray:
        X, Y = grid.mesh()
        return np.broadcast_to(self.g(X, Y), grid.shape).astype(float)

    def check(self, grid: Grid2D) -> np.ndarray:
        """Sample ``g`` and verify the bound at every node; returns the samples."""
        g = self.sample(grid)
        excess = np.abs(g) - self.bound(grid)
        if np.any(excess > 0.0):
            i, j = np.unravel_index(int(np.argmax(excess)), grid.shape)
            raise ValidationError(
                f"|g| exceeds its {self.mode} bound by {excess[i, j]:.3g} "
                f"at ({grid.x[i]:.6g}, {grid.y[j]:.6g})"
            )
        return g


def _check_nodes(grid: Grid2D, refine: int = 4) -> tuple[np.ndarray, np.ndarray]:
    x = np.union1d(grid.x, np.linspace(grid.x0, grid.a, refine * grid.nx))
    y = np.union1d(grid.y, np.linspace(grid.y0, grid.b, refine * grid.ny))
    return np.meshgrid(x, y, indexing="ij")


def random_perturbation(
    mode: str,
    grid: Grid2D,
    rng: np.random.Generator,
    *,
    epsilon: float | None = None,
    weight: RassiasWeight | None = None,
    terms: int = 4,
) -> Perturbation:
    """Random trigonometric polynomial scaled to its bound.

    ``g = s * b(x, y) * sum_k c_k sin(m_k x + n_k y + p_k)`` with ``b`` equal to
    ``epsilon``, ``phi_w`` or ``epsilon * phi_w``. The scale ``s`` makes the
    maximum of ``|g| / b`` over the solver grid united with a 4x finer uniform
    grid equal to one (up to a 1e-12 safety factor).
    """
    if terms < 1:
        raise ConfigError("need at least one term")
    coef = rng.normal(size=terms)
    mx = rng.integers(0, 4, size=terms) * math.pi / grid.a
    ny = rng.integers(0, 4, size=terms) * math.pi / grid.b
    phase = rng.uniform(0.0, 2.0 * math.pi, size=terms)
    body = " + ".join(
        f"{float(c)!r}*sin({float(m)!r}*x + {float(n)!r}*y + {float(p)!r})"
        for c, m, n, p in zip(coef, mx, ny, phase)
    )
    shape_fn = as_function(parse(body, ("x", "y")), ("x", "y"))
    X, Y = _check_nodes(grid)
    peak = float(np.max(np.abs(shape_fn(X, Y))))
    if peak == 0.0:
        peak = 1.0
    scale = _SCALE_SAFETY / peak
    if mode == "uh":
        factor = f"{float(epsilon) * scale!r}"
    elif mode == "uhr":
        factor = f"{scale!r}*({weight.source})"
    elif mode == "uhr_eps":
        factor = f"{float(epsilon) * scale!r}*({weight.source})"
    else:
        raise ConfigError(f"perturbation mode must be one of {MODES}, got {mode!r}")
    if mode != "uh" and weight.source is None:
        raise ConfigError("random perturbations for weighted modes need an expression weight")
    expr = parse(f"{factor}*({body})", ("x", "y"))
    return Perturbation(expr, mode, epsilon, weight)


def random_perturbations(
    mode: str,
    grid: Grid2D,
    draws: int,
    seed: int,
    **kwargs,
) -> list[Perturbation]:
    """``draws`` independent perturbations, one child stream of ``seed`` each."""
    children = np.random.SeedSequence(seed).spawn(draws)
    return [random_perturbation(mode, grid, np.random.default_rng(c), **kwargs) for c in children]


# -- constants ----------------------------------------------------------------


def _ml_order_c1(order: FracOrder, ml_order: str) -> float:
    if ml_order == "min":
        return min(order.alpha1, order.alpha2)
    if ml_order == "max":
        return max(order.alpha1, order.alpha2)
    if ml_order == "axis":
        return order.alpha1
    raise ConfigError(f"ml_order must be one of {ML_ORDERS}, got {ml_order!r}")


def uh_constants(
    Lf: float,
    psi: PsiFunction,
    order: FracOrder,
    a: float,
    b: float,
    ml_order: str = "min",
) -> tuple[float, float, float]:
    """Ulam-Hyers constants ``(C1, C2, C3)`` on ``[0, a] x [0, b]``.

    With ``pa = psi(a) - psi(0)`` and ``pb = psi(b) - psi(0)``:
    ``C1 = pa^a1 pb^a2 / (G(a1+1) G(a2+1)) E[Lf G(a1) G(a2) pa^a1 pb^a2]``,
    ``C2 = pb^a2 / G(a2+1) E_a2[Lf G(a2) pb^a2]`` and
    ``C3 = pa^a1 / G(a1+1) E_a1[Lf G(a1) pa^a1]``. The Mittag-Leffler order of
    ``C1`` follows ``ml_order``.
    """
    if Lf < 0:
        raise ConfigError(f"Lf must be >= 0, got {Lf}")
    a1, a2 = order.alpha
    psi0 = float(psi(0.0))
    pa = float(psi(a)) - psi0
    pb = float(psi(b)) - psi0
    if not (math.isfinite(pa) and math.isfinite(pb)):
        raise ConfigError("psi must be finite at the domain extents")
    A, B = pa**a1, pb**a2
    m1 = _ml_order_c1(order, ml_order)
    c1 = A * B / (gamma(a1 + 1) * gamma(a2 + 1)) * mittag_leffler(m1, Lf * gamma(a1) * gamma(a2) * A * B)
    c2 = B / gamma(a2 + 1) * mittag_leffler(a2, Lf * gamma(a2) * B)
    c3 = A / gamma(a1 + 1) * mittag_leffler(a1, Lf * gamma(a1) * A)
    return c1, c2, c3


def uhr_constants(
    lambdas: Sequence[float],
    Lf_star: float,
    psi_sup: float,
    psi0: float,
    order: FracOrder,
    ml_order: str = "min",
    c2c3: str = "paper",
) -> tuple[float, float, float]:
    """Ulam-Hyers-Rassias constants ``(C1, C2, C3)``.

    With ``S = psi_sup - psi(0)``: ``C1 = l1 E[Lf* G(a1) G(a2) S^(a1+a2)]``.
    ``c2c3 = "paper"`` uses ``C2 = l2 E_a1[Lf* G(a1) S^a1]`` and
    ``C3 = l3 E_a2[Lf* G(a2) S^a2]``; ``"swapped"`` exchanges the axis indices
    so each constant matches the integral of its own row.
    """
    if c2c3 not in C2C3_INDICES:
        raise ConfigError(f"uhr_c2c3_indices must be one of {C2C3_INDICES}, got {c2c3!r}")
    a1, a2 = order.alpha
    S = psi_sup - psi0
    if not (math.isfinite(S) and S > 0):
        raise ConfigError(f"psi_sup - psi(0) must be finite and positive, got {S}")
    l1, l2, l3 = lambdas
    m1 = _ml_order_c1(order, ml_order)
    c1 = l1 * mittag_leffler(m1, Lf_star * gamma(a1) * gamma(a2) * S ** (a1 + a2))
    e1 = mittag_leffler(a1, Lf_star * gamma(a1) * S**a1)
    e2 = mittag_leffler(a2, Lf_star * gamma(a2) * S**a2)
    if c2c3 == "paper":
        return c1, l2 * e1, l3 * e2
    return c1, l2 * e2, l3 * e1


# -- solving ------------------------------------------------------------------


def _solve(p: DarbouxProblem, grid: Grid2D, tol: float, max_iter: int, g=None) -> tuple[GridTriple, IterationLog]:
    sol, log = picard_solve(p, grid, tol, max_iter, g=g)
    if not log.converged:
        raise ConvergenceError(
            f"Picard iteration did not converge in {max_iter} sweeps "
            f"(last weighted distance {log.final_distance:.3e})"
        )
    return sol, log


def build_perturbed(
    p: DarbouxProblem,
    pert: Perturbation,
    grid: Grid2D,
    tol: float = 1.0e-10,
    max_iter: int = 200,
) -> tuple[GridTriple, IterationLog]:
    """Solve the problem with source ``f + g`` and the same traces.

    The bound on ``g`` is verified on the grid first.
    """
    g = pert.check(grid)
    return _solve(p, grid, tol, max_iter, g=g)


@dataclass(frozen=True)
class TeMargins:
    """``right side - left side`` of the three integral inequalities at every node."""

    fields: tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def worst(self) -> tuple[float, float, float]:
        return tuple(float(np.min(f)) for f in self.fields)


def te_residuals(
    v: GridTriple,
    p: DarbouxProblem,
    mode: str,
    *,
    epsilon: float | None = None,
    weight: RassiasWeight | None = None,
) -> TeMargins:
    """Margins of the integral inequalities satisfied by a perturbed solution.

    Left sides are ``|v - T - I F(v)|``, ``|v1 - T1 - I_y F(v)|`` and
    ``|v2 - T2 - I_x F(v)|`` with the trace terms ``T`` of the problem. Right
    sides are ``epsilon I 1`` and its single-axis analogues (``uh``),
    ``I phi_w`` (``uhr``) or ``epsilon I phi_w`` (``uhr_eps``).
    """
    from psifrac.darboux import _FixedPointMap

    grid = v.grid
    A = _FixedPointMap(p, grid)
    F = A.rhs(*v.arrays())
    IyF = F @ A.W2.T
    lhs = (
        np.abs(v.u.values - A.T - A.W1 @ IyF),
        np.abs(v.u1.values - A.T1 - IyF),
        np.abs(v.u2.values - A.T2 - A.W1 @ F),
    )
    if mode == "uh":
        if epsilon is None:
            raise ConfigError("uh margins need epsilon")
        R = np.full(grid.shape, float(epsilon))
    elif mode in ("uhr", "uhr_eps"):
        if weight is None:
            raise ConfigError(f"{mode} margins need a weight")
        R = weight.sample(grid) * (1.0 if mode == "uhr" else float(epsilon))
    else:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    RyR = R @ A.W2.T
    rhs = (A.W1 @ RyR, RyR, A.W1 @ R)
    return TeMargins(tuple(r - l for r, l in zip(rhs, lhs)))


# -- certificates -------------------------------------------------------------


@dataclass(frozen=True)
class DrawResult:
    """Outcome for one perturbation."""

    index: int
    g: str | None
    gaps: tuple[float, float, float]
    allowed: tuple[float, float, float]
    worst_margin: tuple[float, float, float]
    te_margins: tuple[float, float, float]
    chain_margins: tuple[float, float, float]
    slack: tuple[float, float, float]
    iterations: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "g": self.g,
            "gaps": list(self.gaps),
            "allowed": list(self.allowed),
            "worst_margin": list(self.worst_margin),
            "te_margins": list(self.te_margins),
            "chain_margins": list(self.chain_margins),
            "slack": list(self.slack),
            "iterations": self.iterations,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class LambdaCertificate:
    """Sampled check of ``I phi_w <= lambda phi_w`` on the grid."""

    lambdas: tuple[float, float, float]
    monotone: bool
    certified: bool
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "lambdas": list(self.lambdas),
            "monotone": self.monotone,
            "certified": self.certified,
            "reason": self.reason,
        }


@dataclass
class StabilityReport:
    """Constants, per-draw gaps and the overall verdict of a certificate run."""

    kind: str
    constants: tuple[float, float, float]
    draws: list[DrawResult]
    gamma_rule: str
    ml_order: str
    tol: float
    grid: dict
    problem: dict
    epsilon: float | None = None
    lambdas: LambdaCertificate | None = None
    constants_alternate: dict = field(default_factory=dict)
    c2c3: str | None = None
    psi_sup: float | None = None
    Lf_star: float | None = None
    extrapolated_boundary: bool = False

    @property
    def passed(self) -> bool:
        return all(d.passed for d in self.draws)

    @property
    def failures(self) -> list[int]:
        return [d.index for d in self.draws if not d.passed]

    def max_gaps(self) -> tuple[float, float, float]:
        return tuple(max((d.gaps[i] for d in self.draws), default=0.0) for i in range(3))

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "passed": self.passed,
            "constants": {"C1": self.constants[0], "C2": self.constants[1], "C3": self.constants[2]},
            "epsilon": self.epsilon,
            "gamma_rule": self.gamma_rule,
            "ml_order": self.ml_order,
            "tol": self.tol,
            "grid": self.grid,
            "problem": self.problem,
            "extrapolated_boundary": self.extrapolated_boundary,
            "max_gaps": list(self.max_gaps()),
            "failures": self.failures,
            "draws": [d.to_dict() for d in self.draws],
        }
        if self.kind == "uhr":
            out["lambdas"] = self.lambdas.to_dict() if self.lambdas else None
            out["constants_alternate"] = self.constants_alternate
            out["uhr_c2c3_indices"] = self.c2c3
            out["psi_sup"] = self.psi_sup
            out["Lf_star"] = self.Lf_star
        return out


class _Reference:
    """Unperturbed solution on the fine grid and its every-other-node subgrid."""

    def __init__(self, p: DarbouxProblem, grid: Grid2D, tol: float, max_iter: int):
        self.p, self.grid, self.tol, self.max_iter = p, grid, tol, max_iter
        self.coarse, self.ix, self.iy = grid.coarsen()
        self.fine_sol, self.fine_log = _solve(p, grid, tol, max_iter)
        self.coarse_sol, self.coarse_log = _solve(p, self.coarse, tol, max_iter)
        self.Wx = integral_matrix(p.psi(grid.x), p.order.alpha1)
        self.Wy = integral_matrix(p.psi(grid.y), p.order.alpha2)

    def solver_error(self, *logs: IterationLog) -> float:
        q = self.p.contraction
        steps = [lg.entries[-1]["sup_distance"] for lg in (self.fine_log, self.coarse_log, *logs)]
        return max(steps) / (1.0 - q)

    def gaps(self, pert: Perturbation):
        g = pert.check(self.grid)
        v, vlog = _solve(self.p, self.grid, self.tol, self.max_iter, g=g)
        vc, vclog = _solve(self.p, self.coarse, self.tol, self.max_iter, g=pert.sample(self.coarse))
        diff = [a - b for a, b in zip(v.arrays(), self.fine_sol.arrays())]
        diff_c = [a - b for a, b in zip(vc.arrays(), self.coarse_sol.arrays())]
        sub = np.ix_(self.ix, self.iy)
        quad = [float(np.max(np.abs(d[sub] - dc))) for d, dc in zip(diff, diff_c)]
        solver = self.solver_error(vlog, vclog)
        slack = tuple(SLACK_FACTOR * (solver + qe) for qe in quad)
        return v, vlog, diff, slack

    def chain(self, diff, R: np.ndarray, Lf) -> tuple[float, float, float]:
        # proof chain: |d_i| <= (size term)_i + Lf I_i max_j |d_j|
        M = Lf * np.max(np.abs(np.stack(diff)), axis=0)
        RyR = R @ self.Wy.T
        MyM = M @ self.Wy.T
        bounds = (self.Wx @ RyR + self.Wx @ MyM, RyR + MyM, self.Wx @ R + self.Wx @ M)
        return tuple(float(np.min(b - np.abs(d))) for b, d in zip(bounds, diff))


def _run_batch(fn, items: Sequence) -> list:
    workers = worker_count(len(items))
    if workers == 1:
        return [fn(i, it) for i, it in enumerate(items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(items)), items))


def _as_list(perts) -> list[Perturbation]:
    return [perts] if isinstance(perts, Perturbation) else list(perts)


def uh_certify(
    p: DarbouxProblem,
    epsilon: float,
    perts: Perturbation | Sequence[Perturbation],
    grid: Grid2D,
    tol: float = 1.0e-10,
    *,
    max_iter: int = 200,
    ml_order: str = "min",
) -> StabilityReport:
    """Certify ``sup |v_i - u_i| <= epsilon C_i + slack`` for every perturbation."""
    perts = _as_list(perts)
    for pt in perts:
        if pt.mode != "uh" or not math.isclose(pt.epsilon, epsilon):
            raise ConfigError("uh certificates need uh-mode perturbations with the same epsilon")
    C = uh_constants(p.Lf, p.psi, p.order, p.a, p.b, ml_order)
    ref = _Reference(p, grid, tol, max_iter)
    ones = np.full(grid.shape, float(epsilon))

    def job(index: int, pert: Perturbation) -> DrawResult:
        v, vlog, diff, slack = ref.gaps(pert)
        gaps = tuple(float(np.max(np.abs(d))) for d in diff)
        allowed = tuple(epsilon * c for c in C)
        margin = tuple(al + s - gp for al, s, gp in zip(allowed, slack, gaps))
        te = te_residuals(v, p, "uh", epsilon=epsilon).worst
        chain = ref.chain(diff, ones, p.Lf)
        ok = all(m >= 0 for m in margin)
        return DrawResult(index, pert.source, gaps, allowed, margin, te, chain, slack, vlog.iterations, ok)

    draws = _run_batch(job, perts)
    return StabilityReport(
        kind="uh",
        constants=C,
        draws=draws,
        gamma_rule=p.order.gamma_rule,
        ml_order=ml_order,
        tol=tol,
        grid=grid.to_config(),
        problem=p.to_config(),
        epsilon=epsilon,
        extrapolated_boundary=ref.fine_log.extrapolated_boundary,
    )


def uhr_lambda_certify(
    w: RassiasWeight,
    psi: PsiFunction,
    order: FracOrder,
    grid: Grid2D,
    cap: float = LAMBDA_CAP,
) -> LambdaCertificate:
    """Sampled lambdas with ``I phi_w <= l1 phi_w``, ``I_y phi_w <= l2 phi_w``, ``I_x phi_w <= l3 phi_w``.

    :raises ValidationError: ``phi_w`` is not positive at every node.
    """
    Phi = w.sample(grid)
    if not np.all(np.isfinite(Phi)):
        raise ValidationError("Rassias weight is not finite on the grid")
    if np.any(Phi <= 0.0):
        i, j = np.unravel_index(int(np.argmin(Phi)), grid.shape)
        raise ValidationError(
            f"Rassias weight must be positive; phi_w({grid.x[i]:.6g}, {grid.y[j]:.6g}) = {Phi[i, j]:.3g}"
        )
    Wx = integral_matrix(psi(grid.x), order.alpha1)
    Wy = integral_matrix(psi(grid.y), order.alpha2)
    PyP = Phi @ Wy.T
    lam = tuple(float(np.max(r / Phi)) for r in (Wx @ PyP, PyP, Wx @ Phi))
    monotone = bool(np.all(np.diff(Phi, axis=0) >= 0) and np.all(np.diff(Phi, axis=1) >= 0))
    reason = None
    if not all(math.isfinite(v) and v <= cap for v in lam):
        reason = f"ratio exceeds the cap {cap:g}"
    elif not monotone:
        reason = "weight is not increasing in each coordinate"
    elif w.lambdas is not None and any(u < s for u, s in zip(w.lambdas, lam)):
        reason = "user lambdas are smaller than the sampled ratios"
    if w.lambdas is not None and reason is None:
        lam = w.lambdas
    return LambdaCertificate(lam, monotone, reason is None, reason)


def uhr_certify(
    p: DarbouxProblem,
    w: RassiasWeight,
    perts: Perturbation | Sequence[Perturbation],
    grid: Grid2D,
    tol: float = 1.0e-10,
    *,
    psi_sup: float | None = None,
    Lf_field=None,
    max_iter: int = 200,
    ml_order: str = "min",
    c2c3: str = "paper",
) -> StabilityReport:
    """Certify ``|v_i - u_i| <= C_i phi_w + slack`` at every node for every perturbation.

    ``psi_sup`` defaults to the supremum recorded on ``p.psi``; an unbounded
    weight function is refused. ``Lf_field`` is an optional expression or
    callable ``Lf(x, y)`` whose grid supremum enters the constants (default:
    the problem's ``Lf``). Perturbations in ``uhr_eps`` mode scale the bound by
    their ``epsilon``.
    """
    perts = _as_list(perts)
    sup = p.psi.sup if psi_sup is None else float(psi_sup)
    if sup is None or not math.isfinite(sup):
        raise ConfigError("Ulam-Hyers-Rassias constants need a bounded psi with a finite supremum")
    cert = uhr_lambda_certify(w, p.psi, p.order, grid)
    if not cert.certified:
        raise ConfigError(f"Rassias weight is not lambda-certified: {cert.reason}")
    if Lf_field is None:
        Lf_star = p.Lf
    else:
        X, Y = grid.mesh()
        Lf_star = float(np.max(as_function(Lf_field, ("x", "y"))(X, Y)))
    psi0 = float(p.psi(0.0))
    C = uhr_constants(cert.lambdas, Lf_star, sup, psi0, p.order, ml_order, c2c3)
    alternate = {
        k: dict(zip(("C1", "C2", "C3"), uhr_constants(cert.lambdas, Lf_star, sup, psi0, p.order, ml_order, k)))
        for k in C2C3_INDICES
    }
    for pt in perts:
        if pt.mode not in ("uhr", "uhr_eps"):
            raise ConfigError("uhr certificates need uhr or uhr_eps perturbations")
    ref = _Reference(p, grid, tol, max_iter)
    Phi = w.sample(grid)

    def job(index: int, pert: Perturbation) -> DrawResult:
        scale = 1.0 if pert.mode == "uhr" else float(pert.epsilon)
        v, vlog, diff, slack = ref.gaps(pert)
        gaps = tuple(float(np.max(np.abs(d))) for d in diff)
        allowed_fields = [scale * c * Phi for c in C]
        margin = tuple(
            float(np.min(al + s - np.abs(d))) for al, s, d in zip(allowed_fields, slack, diff)
        )
        allowed = tuple(float(np.max(a)) for a in allowed_fields)
        te = te_residuals(v, p, pert.mode, epsilon=pert.epsilon, weight=w).worst
        chain = ref.chain(diff, scale * Phi, Lf_star)
        ok = all(m >= 0 for m in margin)
        return DrawResult(index, pert.source, gaps, allowed, margin, te, chain, slack, vlog.iterations, ok)

    draws = _run_batch(job, perts)
    return StabilityReport(
        kind="uhr",
        constants=C,
        draws=draws,
        gamma_rule=p.order.gamma_rule,
        ml_order=ml_order,
        tol=tol,
        grid=grid.to_config(),
        problem=p.to_config(),
        lambdas=cert,
        constants_alternate=alternate,
        c2c3=c2c3,
        psi_sup=sup,
        Lf_star=Lf_star,
        extrapolated_boundary=ref.fine_log.extrapolated_boundary,
    )
