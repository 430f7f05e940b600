"""Threshold choice, signaling consistency tests and total variation distance."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from bellrand.core import BellFunction, CountTable, JointDistribution

__all__ = [
    "NoExpectedViolation",
    "log_stats",
    "choose_threshold",
    "SignalingTest",
    "signaling_tests",
    "two_proportion_z",
    "normal_two_tail",
    "tv_distance",
]


class NoExpectedViolation(UserWarning):
    """E(ln T) <= 0: the data are not expected to exceed any threshold >= 1."""


def log_stats(Q, T: BellFunction) -> tuple[float, float]:
    """Mean and variance of ln T under Q by 16-cell summation."""
    p = (Q.p if isinstance(Q, JointDistribution) else np.asarray(Q)).ravel()
    lt = np.log(T.t_values).ravel()
    mu = math.fsum(p * lt)
    var = math.fsum(p * (lt - mu) ** 2)
    return mu, var


def choose_threshold(Q, T: BellFunction, n: int, quantile_z: float = 1.645, settings=None) -> float:
    """ln v_thresh = n mu - z sqrt(n) s for ln T under Q.

    `settings` optionally replaces Q's settings marginals (same conditionals).
    A warning of category NoExpectedViolation is issued when mu <= 0.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if settings is not None:
        J = Q if isinstance(Q, JointDistribution) else JointDistribution(Q, non_signaling=False)
        p = J.conditional() * np.asarray(settings, dtype=float).reshape(4, 1)
    else:
        p = Q.p if isinstance(Q, JointDistribution) else np.asarray(Q)
    mu, var = log_stats(p, T)
    if mu <= 0:
        warnings.warn(f"E(ln T) = {mu:.3e} <= 0: no violation expected", NoExpectedViolation, stacklevel=2)
    return n * mu - quantile_z * math.sqrt(n * var)


def normal_two_tail(z: float) -> float:
    """P(|Z| >= |z|) for standard normal Z, via the complementary error function."""
    return math.erfc(abs(z) / math.sqrt(2))


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> float:
    """Pooled-variance z statistic for p1 - p2."""
    if n1 <= 0 or n2 <= 0:
        raise ValueError("both samples must be non-empty")
    pooled = (k1 + k2) / (n1 + n2)
    var = pooled * (1 - pooled) * (1 / n1 + 1 / n2)
    if var == 0:
        return 0.0
    return (k1 / n1 - k2 / n2) / math.sqrt(var)


@dataclass(frozen=True)
class SignalingTest:
    label: str
    z: float
    p_value: float


def signaling_tests(counts: CountTable) -> list[SignalingTest]:
    """Four pooled two-proportion tests of the non-signaling equalities.

    1. P(a=+|x=0,y=0) vs P(a=+|x=0,y=1)
    2. P(a=+|x=1,y=0) vs P(a=+|x=1,y=1)
    3. P(b=+|x=0,y=0) vs P(b=+|x=1,y=0)
    4. P(b=+|x=0,y=1) vs P(b=+|x=1,y=1)
    """
    if not isinstance(counts, CountTable):
        counts = CountTable(counts)
    N = counts.counts
    tot = N.sum(axis=1)
    if np.any(tot == 0):
        raise ValueError("every setting pair needs trials")
    a_plus = N[:, 0] + N[:, 1]
    b_plus = N[:, 0] + N[:, 2]
    pairs = [
        ("P(A|X=0,Y) = P(A|X=0)", a_plus, 0, 1),
        ("P(A|X=1,Y) = P(A|X=1)", a_plus, 2, 3),
        ("P(B|X,Y=0) = P(B|Y=0)", b_plus, 0, 2),
        ("P(B|X,Y=1) = P(B|Y=1)", b_plus, 1, 3),
    ]
    out = []
    for label, k, r1, r2 in pairs:
        z = two_proportion_z(int(k[r1]), int(tot[r1]), int(k[r2]), int(tot[r2]))
        out.append(SignalingTest(label, z, normal_two_tail(z)))
    return out


def _as_arrays(P1, P2):
    if isinstance(P1, Mapping) or isinstance(P2, Mapping):
        if not (isinstance(P1, Mapping) and isinstance(P2, Mapping)):
            raise ValueError("both distributions must be mappings or both arrays")
        if set(P1) != set(P2):
            raise ValueError("distributions have different outcome sets")
        keys = list(P1)
        return np.array([P1[k] for k in keys], float), np.array([P2[k] for k in keys], float)
    a = np.asarray(getattr(P1, "p", P1), dtype=float)
    b = np.asarray(getattr(P2, "p", P2), dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"outcome sets differ in shape: {a.shape} vs {b.shape}")
    return a.ravel(), b.ravel()


def tv_distance(P1, P2, tol: float = 1e-9) -> float:
    """Half the l1 distance between two distributions on the same outcome set."""
    a, b = _as_arrays(P1, P2)
    for v in (a, b):
        if np.any(v < -tol) or abs(math.fsum(v) - 1) > tol:
            raise ValueError("inputs must be normalized probability distributions")
    return 0.5 * math.fsum(np.abs(a - b))
