"""scikit-learn style wrappers.

Each row of ``X`` is one function sampled on the fixed mesh ``nodes``; the
transformers map rows to rows. ``DarbouxSolver.fit`` runs the Picard solve
and ``predict`` interpolates the solution at query points.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from psifrac.darboux import DarbouxProblem, picard_solve
from psifrac.exceptions import ConvergenceError, ValidationError
from psifrac.fracops import FracOrder, hilfer_derivative_1d, integral_matrix
from psifrac.grid import Grid2D
from psifrac.psi import PsiFunction, builtin

__all__ = ["PsiFractionalIntegral", "PsiHilferDerivative", "DarbouxSolver"]


def _resolve_psi(psi) -> PsiFunction:
    return builtin(psi) if isinstance(psi, str) else psi


def _check_nodes(nodes) -> np.ndarray:
    xs = np.asarray(nodes, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or not np.all(np.diff(xs) > 0):
        raise ValidationError("nodes must be a strictly increasing 1-D array")
    return xs


class PsiFractionalIntegral(BaseEstimator, TransformerMixin):
    """Left psi-fractional integral of each row, base point ``nodes[0]``."""

    def __init__(self, nodes=None, alpha=0.5, psi="identity"):
        self.nodes = nodes
        self.alpha = alpha
        self.psi = psi

    def fit(self, X=None, y=None):
        xs = _check_nodes(self.nodes)
        p = _resolve_psi(self.psi)
        p.check_base(xs[0])
        self.matrix_ = integral_matrix(np.asarray(p(xs), dtype=float), self.alpha)
        self.n_features_in_ = xs.size
        return self

    def transform(self, X):
        check_is_fitted(self, "matrix_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return X @ self.matrix_.T


class PsiHilferDerivative(BaseEstimator, TransformerMixin):
    """psi-Hilfer derivative of each row, base point ``nodes[0]``."""

    def __init__(self, nodes=None, alpha=0.5, beta=0.5, psi="identity"):
        self.nodes = nodes
        self.alpha = alpha
        self.beta = beta
        self.psi = psi

    def fit(self, X=None, y=None):
        xs = _check_nodes(self.nodes)
        self.psi_ = _resolve_psi(self.psi)
        self.psi_.check_base(xs[0])
        self.nodes_ = xs
        self.n_features_in_ = xs.size
        return self

    def transform(self, X):
        check_is_fitted(self, "nodes_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return np.vstack([hilfer_derivative_1d(row, self.psi_, self.alpha, self.beta, self.nodes_) for row in X])


class DarbouxSolver(BaseEstimator, RegressorMixin):
    """Solve the Darboux problem on ``[0, a] x [0, b]``; ``predict`` takes ``(m, 2)`` points."""

    def __init__(
        self,
        f="0",
        alpha1=1.0,
        alpha2=1.0,
        beta=1.0,
        psi="identity",
        a=1.0,
        b=1.0,
        phi="0",
        xi="0",
        Lf=1.0,
        nx=128,
        ny=128,
        tol=1.0e-10,
        max_iter=200,
    ):
        self.f = f
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.beta = beta
        self.psi = psi
        self.a = a
        self.b = b
        self.phi = phi
        self.xi = xi
        self.Lf = Lf
        self.nx = nx
        self.ny = ny
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        problem = DarbouxProblem(
            f=self.f,
            order=FracOrder(self.alpha1, self.alpha2, self.beta),
            psi=_resolve_psi(self.psi),
            a=self.a,
            b=self.b,
            phi=self.phi,
            xi=self.xi,
            Lf=self.Lf,
        )
        grid = Grid2D(self.a, self.b, self.nx, self.ny)
        sol, log = picard_solve(problem, grid, self.tol, self.max_iter)
        if not log.converged:
            raise ConvergenceError(f"no convergence in {self.max_iter} sweeps")
        self.problem_, self.solution_, self.log_ = problem, sol, log
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        X = check_array(X)
        return self.solution_.u.interpolate(X)
