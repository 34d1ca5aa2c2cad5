"""The psi-fractional Gronwall bound and its sampled verification.

If ``u <= v + h * int_a^t psi'(s) (psi(t) - psi(s))**(alpha-1) u(s) ds`` with
``h`` nonnegative and nondecreasing, then

    u(t) <= v(t) E_alpha[h(t) Gamma(alpha) (psi(t) - psi(a))**alpha].

The integral in the hypothesis equals ``Gamma(alpha) I^{alpha; psi} u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from psifrac.exceptions import ConvergenceError, DomainError, ValidationError
from psifrac.fracops import integral_matrix
from psifrac.psi import PsiFunction
from psifrac.specfun import DEFAULT_REL_TOL, gamma, mittag_leffler

__all__ = ["gronwall_bound", "verify_gronwall", "GronwallReport", "picard_1d", "SLACK_FACTOR"]

#: verification tolerance as a multiple of the estimated quadrature error
SLACK_FACTOR = 10.0


def gronwall_bound(v_t, h_t, alpha: float, psi: PsiFunction, a: float, t):
    """``v E_alpha(h Gamma(alpha) (psi(t) - psi(a))**alpha)``, elementwise over arrays."""
    v, h, tt = np.broadcast_arrays(*(np.asarray(z, dtype=float) for z in (v_t, h_t, t)))
    if np.any(tt < a):
        raise DomainError(f"t must be >= the base point {a}")
    if np.any(v < 0) or np.any(h < 0):
        raise DomainError("v and h must be nonnegative")
    span = np.asarray(psi(tt) - psi(a), dtype=float)
    g = gamma(alpha)
    out = np.empty(v.shape)
    for idx in np.ndindex(v.shape):
        out[idx] = v[idx] * mittag_leffler(alpha, h[idx] * g * span[idx] ** alpha)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GronwallReport:
    """Per-node outcome of :func:`verify_gronwall`.

    ``conclusion_margin = bound + slack - u``; a node violates the conclusion
    when it is negative. ``consistent`` is false only for a genuine
    counterexample: a node where the hypothesis holds but the conclusion fails.
    """

    ts: np.ndarray
    u: np.ndarray
    integral: np.ndarray
    bound: np.ndarray
    slack: np.ndarray
    hypothesis_margin: np.ndarray
    conclusion_margin: np.ndarray

    @property
    def hypothesis_ok(self) -> np.ndarray:
        return self.hypothesis_margin >= 0.0

    @property
    def conclusion_ok(self) -> np.ndarray:
        return self.conclusion_margin >= 0.0

    @property
    def violations(self) -> np.ndarray:
        """Indices of nodes where the conclusion fails."""
        return np.flatnonzero(~self.conclusion_ok)

    @property
    def consistent(self) -> bool:
        return bool(np.all(self.conclusion_ok | ~self.hypothesis_ok))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.conclusion_ok))

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "consistent": self.consistent,
            "min_conclusion_margin": float(np.min(self.conclusion_margin)),
            "min_hypothesis_margin": float(np.min(self.hypothesis_margin)),
            "violations": [int(i) for i in self.violations],
            "rows": [
                {"t": float(t), "u": float(u), "bound": float(b), "slack": float(s), "margin": float(m)}
                for t, u, b, s, m in zip(self.ts, self.u, self.bound, self.slack, self.conclusion_margin)
            ],
        }


def _quadrature_error(w: np.ndarray, u: np.ndarray, alpha: float, fine: np.ndarray) -> np.ndarray:
    # compare against the same rule on every other node, spread back to all nodes
    idx = np.unique(np.r_[np.arange(0, w.size, 2), w.size - 1])
    coarse = integral_matrix(w[idx], alpha) @ u[idx]
    return np.interp(w, w[idx], np.abs(fine[idx] - coarse))


def verify_gronwall(u_samples, v_samples, h_samples, alpha: float, psi: PsiFunction, a: float, ts) -> GronwallReport:
    """Check the Gronwall hypothesis and conclusion at every node of ``ts``.

    ``ts[0]`` must equal ``a``. The integral term is computed by product
    integration on ``ts``. Both inequalities are tested with an additive slack
    of ``SLACK_FACTOR`` times the estimated quadrature error plus the
    Mittag-Leffler evaluation tolerance.
    """
    ts = np.asarray(ts, dtype=float)
    u, v, h = (np.broadcast_to(np.asarray(z, dtype=float), ts.shape) for z in (u_samples, v_samples, h_samples))
    if ts.size < 3 or ts[0] != a:
        raise ValidationError("need at least 3 nodes starting at the base point")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v)) and np.all(np.isfinite(h))):
        raise ValidationError("samples must be finite")
    w = np.asarray(psi(ts), dtype=float)
    integral = integral_matrix(w, alpha) @ u
    quad_err = gamma(alpha) * h * _quadrature_error(w, u, alpha, integral)
    bound = gronwall_bound(v, h, alpha, psi, a, ts)
    slack = SLACK_FACTOR * (quad_err + DEFAULT_REL_TOL * np.abs(bound))
    rhs = v + h * gamma(alpha) * integral
    return GronwallReport(
        ts=ts,
        u=u.copy(),
        integral=integral,
        bound=bound,
        slack=slack,
        hypothesis_margin=rhs + slack - u,
        conclusion_margin=bound + slack - u,
    )


def picard_1d(
    v,
    lam: float,
    alpha: float,
    psi: PsiFunction,
    ts,
    *,
    tol: float = 1.0e-13,
    max_iter: int = 500,
) -> np.ndarray:
    """Solve ``u = v + lam I^{alpha; psi} u`` on ``ts`` by Picard iteration from ``u = v``."""
    ts = np.asarray(ts, dtype=float)
    v = np.broadcast_to(np.asarray(v, dtype=float), ts.shape)
    W = lam * integral_matrix(np.asarray(psi(ts), dtype=float), alpha)
    u = v.copy()
    for _ in range(max_iter):
        nxt = v + W @ u
        dist = float(np.max(np.abs(nxt - u)))
        u = nxt
        if dist <= tol * max(1.0, float(np.max(np.abs(u)))):
            return u
    raise ConvergenceError(f"Picard iteration stalled at distance {dist:.3e} after {max_iter} sweeps")
