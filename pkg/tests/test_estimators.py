import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from psifrac.estimators import DarbouxSolver, PsiFractionalIntegral, PsiHilferDerivative
from psifrac.exceptions import ValidationError
from psifrac.grid import graded_nodes

NODES = graded_nodes(0.0, 1.0, 128)


def test_integral_transformer():
    X = np.vstack([np.ones_like(NODES), NODES])
    out = PsiFractionalIntegral(nodes=NODES, alpha=1.0).fit_transform(X)
    assert np.allclose(out[0], NODES) and np.allclose(out[1], NODES**2 / 2)
    with pytest.raises(ValidationError):
        PsiFractionalIntegral(nodes=NODES).fit().transform(np.ones((1, 5)))


def test_derivative_inverts_integral_in_pipeline():
    pipe = make_pipeline(
        PsiFractionalIntegral(nodes=NODES, alpha=0.6),
        PsiHilferDerivative(nodes=NODES, alpha=0.6, beta=0.5),
    )
    X = np.vstack([NODES, np.sin(NODES)])
    assert np.max(np.abs(pipe.fit_transform(X) - X)) < 1e-2


def test_solver_estimator():
    est = DarbouxSolver(f="1", nx=32, ny=32)
    assert clone(est).get_params() == est.get_params()
    pred = est.fit().predict([[0.5, 0.5], [1.0, 0.25]])
    assert np.allclose(pred, [0.25, 0.25], atol=1e-3)
    assert est.log_.converged
