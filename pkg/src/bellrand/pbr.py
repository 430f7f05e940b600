"""Bell-function construction by maximizing E(ln T) under LR constraints."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from bellrand._convex import maximize_log_sum
from bellrand.core import (
    LR_CONDITIONALS,
    BellFunction,
    JointDistribution,
    ValidationError,
    expectation,
    extreme_conditionals,
)

__all__ = [
    "SettingsDistribution",
    "PBRResult",
    "NoViolationError",
    "extremal_settings",
    "optimize_bell_function",
    "compute_m",
    "max_expectation",
    "asymptotic_rate",
    "round_down",
]

ROUND_DIGITS = 10
# Lower bound on T for cells the fitted distribution gives zero weight; the
# objective ignores them, so without a floor they would be driven to T = 0.
T_FLOOR = 1e-4
# Free cells: every ab except 00 (column 3), which is pinned to T = 1.
FREE = np.array([c for c in range(16) if c % 4 != 3])


class NoViolationError(ValueError):
    """Raised when a Bell function has no non-signaling excess (m <= 0)."""


@dataclass(frozen=True)
class SettingsDistribution:
    q: np.ndarray
    alpha: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).ravel()
        if q.shape != (4,):
            raise ValidationError("settings distribution needs 4 probabilities")
        if abs(math.fsum(q) - 1) > 1e-12:
            raise ValidationError("settings probabilities must sum to 1")
        if np.any(q < 0.25 - self.alpha - 1e-12) or np.any(q > 0.25 + self.alpha + 1e-12):
            raise ValidationError(f"settings outside [1/4-alpha, 1/4+alpha] for alpha={self.alpha}")
        q = q.copy()
        q.setflags(write=False)
        object.__setattr__(self, "q", q)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 <= alpha < 0.25:
        raise ValueError(f"alpha={alpha} outside [0, 1/4)")
    return alpha


@lru_cache(maxsize=64)
def extremal_settings(alpha: float = 0.0) -> tuple[SettingsDistribution, ...]:
    alpha = _check_alpha(alpha)
    if alpha == 0:
        return (SettingsDistribution(np.full(4, 0.25), 0.0),)
    out = []
    for high in itertools.combinations(range(4), 2):
        q = np.full(4, 0.25 - alpha)
        q[list(high)] = 0.25 + alpha
        out.append(SettingsDistribution(q, alpha))
    return tuple(out)


def max_expectation(t_values, alpha: float = 0.0, points=None) -> float:
    """max E(T) over the given conditional points paired with extremal settings."""
    t = np.asarray(t_values, dtype=float).reshape(4, 4)
    pts = extreme_conditionals() if points is None else points
    best = -math.inf
    for s in extremal_settings(_check_alpha(alpha)):
        for cond in pts:
            best = max(best, expectation(t, cond * s.q[:, None]))
    return best


def compute_m(t_values, alpha: float = 0.0) -> float:
    """Non-signaling excess m = max E(T) - 1 over the 24 extreme points."""
    t = np.asarray(getattr(t_values, "t_values", t_values), dtype=float).reshape(4, 4)
    if np.any(t <= 0):
        raise ValidationError("Bell function values must be strictly positive")
    m = max_expectation(t, alpha) - 1.0
    if m <= 0:
        raise NoViolationError(f"m={m!r} is not positive")
    return m


def round_down(t_values, digits: int = ROUND_DIGITS) -> np.ndarray:
    """Truncate each value toward zero at the given decimal digit."""
    scale = 10.0**digits
    t = np.asarray(t_values, dtype=float)
    out = np.floor(t * scale) / scale
    # Guard against the division landing one ulp above the original value.
    return np.where(out > t, np.nextafter(out, 0.0), out)


@lru_cache(maxsize=64)
def _lr_constraints(alpha: float):
    """Rows of E(T) <= 1 restricted to the 12 free cells."""
    rows, rhs = [], []
    for s in extremal_settings(alpha):
        for cond in LR_CONDITIONALS:
            coef = (cond * s.q[:, None]).ravel()
            const = math.fsum(np.delete(coef, FREE))
            row = coef[FREE]
            if np.any(row != 0):
                rows.append(row)
                rhs.append(1.0 - const)
    return np.array(rows), np.array(rhs)


@dataclass(frozen=True)
class PBRResult:
    bell: BellFunction
    t_raw: np.ndarray
    m_raw: float
    objective: float
    violation: bool
    kkt_residual: float

    @property
    def t_values(self):
        return self.bell.t_values

    @property
    def m(self):
        return self.bell.m


def optimize_bell_function(Q: JointDistribution, alpha: float = 0.0, tol: float = 1e-10,
                           round_digits: int | None = ROUND_DIGITS) -> PBRResult:
    """Maximize E(ln T)_Q over Bell functions with T(00|xy) = 1.

    The raw optimizer output is rounded down at `round_digits` decimals (None
    disables rounding), the LR constraints are re-verified and m is
    recomputed from the rounded values.
    """
    alpha = _check_alpha(alpha)
    if not isinstance(Q, JointDistribution):
        Q = JointDistribution(Q)
    q = Q.p.ravel()[FREE]
    A, b = _lr_constraints(alpha)
    n = len(FREE)
    zero = q <= 0
    if zero.any():
        # Cells the objective ignores still need T > 0.
        A = np.vstack([A, -np.eye(n)[zero]])
        b = np.concatenate([b, np.full(int(zero.sum()), -T_FLOOR)])
    sol = maximize_log_sum(q, np.eye(n), np.zeros(n), A, b, x0=np.full(n, 0.5), tol=tol)
    t_raw = np.ones(16)
    t_raw[FREE] = sol.x
    t_raw = t_raw.reshape(4, 4)
    t = round_down(t_raw, round_digits) if round_digits is not None else t_raw.copy()
    t[:, 3] = 1.0
    # A value below the rounding grain keeps its raw (positive) value.
    t = np.where(t > 0, t, t_raw)
    if np.any(t <= 0):
        raise ValidationError("optimized Bell function has a non-positive entry")
    lr_max = max_expectation(t, alpha, LR_CONDITIONALS)
    if lr_max > 1 + 1e-12:
        raise ValidationError(f"rounded Bell function violates the LR bound: {lr_max!r}")
    m_raw = max_expectation(t_raw, alpha) - 1.0
    m = max_expectation(t, alpha) - 1.0
    objective = math.fsum((Q.p * np.log(t)).ravel())
    violation = objective > 0 and m > 0
    bell = BellFunction(t, max(m, 0.0), alpha)
    return PBRResult(bell, t_raw, m_raw, objective, violation, sol.kkt_residual)


def asymptotic_rate(T: BellFunction, Q: JointDistribution) -> float:
    """Asymptotic certified bits per trial, E(log2 T)_Q / (2m)."""
    if T.m <= 0:
        raise NoViolationError("asymptotic rate needs m > 0")
    p = Q.p if isinstance(Q, JointDistribution) else np.asarray(Q)
    return math.fsum((p * np.log2(T.t_values)).ravel()) / (2 * T.m)
