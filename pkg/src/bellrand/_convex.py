"""Small dense solver for weighted log objectives under linear inequalities.

Solves

    maximize   sum_k w_k * ln(G x + g0)_k
    subject to A x <= b

with a primal log-barrier Newton method followed by an equality-constrained
Newton polish on the detected active set. Problem sizes here are tiny (at
most a few dozen variables and about a hundred constraints), so every linear
system is solved densely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass
class Solution:
    x: np.ndarray
    objective: float
    multipliers: np.ndarray
    kkt_residual: float
    gap: float
    iterations: int
    active: np.ndarray
    polished: bool


class _Problem:
    def __init__(self, w, G, g0, A, b):
        self.w = np.asarray(w, dtype=float)
        self.G = np.asarray(G, dtype=float)
        self.g0 = np.asarray(g0, dtype=float)
        keep = self.w > 0
        self.wk, self.Gk, self.g0k = self.w[keep], self.G[keep], self.g0[keep]
        n = self.G.shape[1]
        self.A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float).reshape(-1, n)
        self.b = np.zeros(0) if b is None else np.asarray(b, dtype=float).ravel()
        self.scale = max(float(self.wk.sum()), 1e-300)

    def args(self, x):
        return self.Gk @ x + self.g0k

    def slack(self, x):
        return self.b - self.A @ x

    def objective(self, x):
        u = self.args(x)
        return math.fsum(self.wk * np.log(u))

    def grad_hess(self, x):
        u = self.args(x)
        r = self.wk / u
        g = self.Gk.T @ r
        H = -(self.Gk.T * (r / u)) @ self.Gk
        return g, H

    def kkt(self, x, lam):
        g, _ = self.grad_hess(x)
        s = self.slack(x)
        stat = np.max(np.abs(g - self.A.T @ lam)) if g.size else 0.0
        comp = float(np.max(np.abs(lam * s))) if lam.size else 0.0
        infeas = float(max(0.0, -s.min())) if s.size else 0.0
        dual = float(max(0.0, -lam.min())) if lam.size else 0.0
        return max(stat / self.scale, comp / self.scale, infeas, dual)


def _solve_sym(M, rhs):
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(M, rhs, rcond=None)[0]


def _barrier_newton(prob: _Problem, x, mu, max_iter):
    """Maximize the barrier-augmented objective at fixed mu."""
    A, b = prob.A, prob.b
    it = 0

    def phi(z):
        s = b - A @ z
        u = prob.args(z)
        if (s.size and s.min() <= 0) or (u.size and u.min() <= 0):
            return -math.inf
        return prob.objective(z) + mu * math.fsum(np.log(s))

    f_cur = phi(x)
    for it in range(1, max_iter + 1):
        s = b - A @ x
        g, H = prob.grad_hess(x)
        g = g - mu * (A.T @ (1.0 / s))
        H = H - mu * (A.T * (1.0 / s**2)) @ A
        dx = _solve_sym(-H, g)
        dec = float(g @ dx)
        if dec <= 0 or np.max(np.abs(dx)) <= 1e-16 * (1 + np.max(np.abs(x))):
            break
        # Inside the quadratic region the decrement falls below the rounding
        # noise of the objective, so only feasibility is checked there.
        local = dec < 1e-9 * (abs(f_cur) + prob.scale)
        t = 1.0
        while True:
            cand = x + t * dx
            f_new = phi(cand)
            if f_new >= f_cur + 0.25 * t * dec or (local and f_new > -math.inf):
                break
            t *= 0.5
            if t < 1e-20:
                return x, it
        x, f_cur = cand, f_new
    return x, it


def _polish(prob: _Problem, x, active, max_iter=50):
    """Newton iterations with the active constraints held as equalities."""
    A_act, b_act = prob.A[active], prob.b[active]
    n, k = x.size, int(active.sum())
    lam = np.zeros(k)
    inactive = ~active
    for _ in range(max_iter):
        g, H = prob.grad_hess(x)
        M = np.zeros((n + k, n + k))
        M[:n, :n] = H
        M[:n, n:] = -A_act.T
        M[n:, :n] = A_act
        rhs = np.concatenate([-g, b_act - A_act @ x])
        sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
        dx, lam = sol[:n], sol[n:]
        t = 1.0
        while t > 1e-12:
            cand = x + t * dx
            if prob.args(cand).min() > 0 and (not inactive.any() or prob.slack(cand)[inactive].min() > 0):
                break
            t *= 0.5
        else:
            return None
        x = cand
        if np.max(np.abs(t * dx)) <= 1e-15 * (1 + np.max(np.abs(x))):
            break
    full = np.zeros(prob.A.shape[0])
    full[active] = lam
    return x, full


def _multiplier_choices(prob: _Problem, x, active, polished):
    """Candidate multipliers: the polish solution and a nonnegative least-squares fit.

    When more constraints are active than there are variables the polish
    system is singular and its least-squares multipliers may be negative;
    the NNLS fit then supplies a valid certificate if one exists.
    """
    out = []
    if polished is not None:
        out.append(polished[1])
    g, _ = prob.grad_hess(x)
    lam_act, _ = nnls(prob.A[active].T, g)
    full = np.zeros(prob.A.shape[0])
    full[active] = lam_act
    out.append(full)
    return out


def maximize_log_sum(w, G, g0, A=None, b=None, x0=None, tol=1e-10, max_iter=200):
    """Maximize sum w ln(G x + g0) subject to A x <= b from a strictly feasible x0."""
    prob = _Problem(w, G, g0, A, b)
    x = np.zeros(prob.G.shape[1]) if x0 is None else np.array(x0, dtype=float)
    if prob.args(x).min() <= 0 or (prob.b.size and prob.slack(x).min() <= 0):
        raise ValueError("starting point is not strictly feasible")
    m = len(prob.b)
    total_it = 0
    if m == 0:
        x, total_it = _barrier_newton(prob, x, 0.0, max_iter)
        lam = np.zeros(0)
        res = prob.kkt(x, lam)
        if res > tol:
            raise ConvergenceError("Newton iteration did not converge", res)
        return Solution(x, prob.objective(x), lam, res, 0.0, total_it, np.zeros(0, bool), False)

    mu = prob.scale / m
    best = None
    while True:
        x, it = _barrier_newton(prob, x, mu, max_iter)
        total_it += it
        lam = mu / prob.slack(x)
        res = prob.kkt(x, lam)
        # Late barrier stages can lose accuracy once slacks reach rounding level.
        if best is None or res <= best.kkt_residual:
            best = Solution(x, prob.objective(x), lam, res, mu * m, total_it, lam > 0.5 * lam.max(), False)
        if mu * m < 1e-16 * prob.scale:
            break
        mu *= 0.1
    for start in (x, best.x):
        active = prob.slack(start) <= 1e-9 * (1 + np.abs(prob.b))
        if not active.any():
            continue
        out = _polish(prob, start.copy(), active)
        candidates = [start] if out is None else [start, out[0]]
        for xc in candidates:
            for lc in _multiplier_choices(prob, xc, active, out):
                res = prob.kkt(xc, lc)
                if res < best.kkt_residual:
                    gap = float(abs(lc @ prob.slack(xc)))
                    best = Solution(xc, prob.objective(xc), lc, res, gap, total_it, active, True)
    if best.kkt_residual > tol:
        raise ConvergenceError("barrier method did not reach the KKT tolerance", best.kkt_residual)
    return best
