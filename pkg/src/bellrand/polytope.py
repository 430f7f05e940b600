"""Maximum-likelihood fit of a non-signaling distribution with uniform settings."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.linalg import null_space

from bellrand._convex import ConvergenceError, maximize_log_sum
from bellrand.core import CountTable, JointDistribution

__all__ = [
    "FitError",
    "ml_nonsignaling_fit",
    "log_likelihood",
    "constraint_matrix",
    "project_nonsignaling",
]


class FitError(ValueError):
    pass


@lru_cache(maxsize=1)
def constraint_matrix() -> tuple[np.ndarray, np.ndarray]:
    """Equality constraints C q = c on the flattened joint table q (16 cells).

    Rows: four settings marginals equal to 1/4, then the four non-signaling
    equalities, written for joint probabilities (valid because every setting
    pair carries the same weight 1/4).
    """
    rows, rhs = [], []
    for r in range(4):
        v = np.zeros((4, 4))
        v[r] = 1.0
        rows.append(v.ravel())
        rhs.append(0.25)
    for x in (0, 1):
        v = np.zeros((4, 4))
        v[2 * x, :2] = 1.0
        v[2 * x + 1, :2] = -1.0
        rows.append(v.ravel())
        rhs.append(0.0)
    for y in (0, 1):
        v = np.zeros((4, 4))
        v[y, [0, 2]] = 1.0
        v[2 + y, [0, 2]] = -1.0
        rows.append(v.ravel())
        rhs.append(0.0)
    C, c = np.array(rows), np.array(rhs)
    C.setflags(write=False)
    c.setflags(write=False)
    return C, c


@lru_cache(maxsize=1)
def _basis() -> np.ndarray:
    C, _ = constraint_matrix()
    B = null_space(C)
    B.setflags(write=False)
    return B


def log_likelihood(freqs: np.ndarray, q: np.ndarray) -> float:
    """Sum of f(ab|xy) ln Q(a,b,x,y) with the 0 ln 0 := 0 convention."""
    f = np.asarray(freqs, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    mask = f > 0
    if np.any(q[mask] <= 0):
        return -np.inf
    return float(np.sum(f[mask] * np.log(q[mask])))


def ml_nonsignaling_fit(counts: CountTable, tol: float = 1e-10, start: np.ndarray | None = None) -> JointDistribution:
    """Return the non-signaling, uniform-settings Q maximizing sum f ln Q.

    `start` optionally supplies a strictly positive feasible joint table to
    begin from; the default is the uniform table 1/16.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not isinstance(counts, CountTable):
        counts = CountTable(counts)
    f = counts.frequencies().ravel()
    B = _basis()
    p0 = np.full(16, 1.0 / 16)
    if start is not None:
        theta0 = B.T @ (np.asarray(start, dtype=float).ravel() - p0)
    else:
        theta0 = np.zeros(B.shape[1])
    # Cells with zero frequency drop out of the objective but must stay >= 0.
    zero = f <= 0
    A = -B[zero] if zero.any() else None
    b = p0[zero] if zero.any() else None
    try:
        sol = maximize_log_sum(f, B, p0, A, b, x0=theta0, tol=tol)
    except ConvergenceError as exc:
        raise FitError(f"fit did not converge: {exc}") from exc
    q = np.clip(p0 + B @ sol.x, 0.0, None).reshape(4, 4)
    # Remove the last ulp-level drift in the settings marginals.
    q *= 0.25 / q.sum(axis=1)[:, None]
    return JointDistribution(q)


def project_nonsignaling(p) -> JointDistribution:
    """Euclidean projection of a 4x4 joint table onto the constraint space.

    Useful for tables published at limited precision, whose rounding breaks
    the equalities by more than the validation tolerance.
    """
    C, c = constraint_matrix()
    v = np.asarray(p, dtype=float).ravel()
    v = v - C.T @ np.linalg.solve(C @ C.T, C @ v - c)
    if np.any(v < 0):
        raise FitError("projection left the probability simplex")
    return JointDistribution(v.reshape(4, 4))
