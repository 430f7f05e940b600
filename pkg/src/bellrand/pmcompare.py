"""Baseline comparison with the CHSH-based min-entropy protocol.

The PR-box weight of a distribution is read off the CHSH statistic,
assuming the local part sits on the CHSH facet (E(T^c) = 3/4). For a general
Q the estimate is the largest 4 (E(T^c) - 3/4) over the 8 PR orientations,
clamped at 0.
"""

from __future__ import annotations

import math

import numpy as np

from bellrand.core import PR_LABELS, JointDistribution, chsh_indicator, expectation

__all__ = ["chsh_statistic", "pr_weight", "pm_min_trials"]


def chsh_statistic(Q, orientation=(0, 0, 0)) -> float:
    """E(T^c)_Q for the CHSH indicator of one PR orientation."""
    p = Q.p if isinstance(Q, JointDistribution) else np.asarray(Q)
    return expectation(chsh_indicator(*orientation), p)


def pr_weight(Q) -> float:
    """Facet-based estimate of the PR-box weight p in Q = p PR + (1-p) LR."""
    best = max(chsh_statistic(Q, k) for k in PR_LABELS)
    return max(0.0, 4 * (best - 0.75))


def pm_min_trials(p: float, eps: float) -> float:
    """8 ln(1/eps) / p^2; infinite when p = 0 (no finite trial count suffices)."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if p < 0 or p > 1:
        raise ValueError("p must lie in [0, 1]")
    if p == 0:
        return math.inf
    return 8 * math.log(1 / eps) / p**2
