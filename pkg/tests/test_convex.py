import warnings

import numpy as np
import pytest
from scipy.optimize import minimize

from bellrand._convex import maximize_log_sum


def test_simplex_closed_form():
    # max sum w log x subject to sum x = 1 has x = w / sum w.
    w = np.array([0.1, 0.2, 0.3, 0.4])
    # Parametrize x = g0 + G z on the simplex.
    G = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1]], float)
    g0 = np.array([0, 0, 0, 1.0])
    sol = maximize_log_sum(w, G, g0, x0=np.full(3, 0.25))
    assert np.allclose(g0 + G @ sol.x, w, atol=1e-10)


def test_active_inequality_matches_scipy():
    rng = np.random.default_rng(4)
    w = rng.random(5)
    A = rng.random((3, 5))
    b = np.ones(3)
    sol = maximize_log_sum(w, np.eye(5), np.zeros(5), A, b, x0=np.full(5, 0.05))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ref = minimize(lambda x: -np.sum(w * np.log(x)), np.full(5, 0.05), method="SLSQP",
                       constraints=[{"type": "ineq", "fun": lambda x: b - A @ x}],
                       bounds=[(1e-9, None)] * 5, options={"ftol": 1e-14, "maxiter": 500})
    f = lambda x: np.sum(w * np.log(x))
    assert f(sol.x) >= f(ref.x) - 1e-9
    assert np.all(A @ sol.x <= b + 1e-12)
    assert sol.kkt_residual < 1e-8


def test_infeasible_start_rejected():
    with pytest.raises(Exception):
        maximize_log_sum(np.ones(2), np.eye(2), np.zeros(2), np.eye(2), np.ones(2), x0=np.full(2, 2.0))
