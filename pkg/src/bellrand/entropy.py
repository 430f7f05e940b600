"""Entropy production: the running product V = prod T_i and the delta bound.

Everything is kept in the log domain. The running log-product is a
compensated (Neumaier) sum, so chunked and single-pass accumulation agree to
rounding level even over 10^8 trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from bellrand import _backend
from bellrand.core import (
    CELL_TO_CODE,
    BellFunction,
    JointDistribution,
    TrialRecord,
    ValidationError,
    expectation,
)

__all__ = [
    "GUARD_BAND",
    "EntropyRun",
    "accumulate",
    "delta_log2",
    "log_v_thresh_upper",
    "lemma_prob_bound",
    "code_log_table",
]

GUARD_BAND = 1e-9


@dataclass(frozen=True)
class EntropyRun:
    n: int
    log_v: float
    log_v_thresh: float
    crossing_index: int | None
    frozen: bool
    passed: bool
    marginal: bool

    @property
    def v(self) -> float:
        return math.exp(self.log_v) if self.log_v < 709 else math.inf


def code_log_table(T: BellFunction) -> np.ndarray:
    """ln T indexed by packed trial code (x<<3 | y<<2 | a<<1 | b)."""
    table = np.zeros(16)
    table[CELL_TO_CODE] = np.log(T.t_values).ravel()
    return table


def _chunks(trials) -> Iterable[np.ndarray]:
    if isinstance(trials, np.ndarray):
        yield trials.astype(np.uint8, copy=False).ravel()
        return
    buf = []
    for item in trials:
        if isinstance(item, TrialRecord):
            buf.append(item.code)
            if len(buf) >= 1 << 16:
                yield np.array(buf, dtype=np.uint8)
                buf = []
        else:
            if buf:
                yield np.array(buf, dtype=np.uint8)
                buf = []
            yield np.asarray(item, dtype=np.uint8).ravel()
    if buf:
        yield np.array(buf, dtype=np.uint8)


def accumulate(trials, T: BellFunction, log_v_thresh: float, adaptive: bool = False,
               backend: str | None = None, guard: float = GUARD_BAND) -> EntropyRun:
    """Accumulate ln T over a trial stream and decide pass or abort.

    `trials` is a code array, an iterable of code-array chunks or an iterable
    of TrialRecord. With `adaptive`, every trial after the first one whose
    running log-product exceeds ln v_thresh (by more than the guard band)
    contributes T = 1. The run passes only when log_v - ln v_thresh exceeds the
    guard band; results inside the band are flagged marginal and abort.
    """
    if not log_v_thresh >= 0:
        raise ValidationError("v_thresh must be at least 1")
    if T.m <= 0:
        raise ValidationError("Bell function needs m > 0")
    kernels = _backend.get(backend)
    logt = code_log_table(T)
    total, comp = 0.0, 0.0
    n = 0
    crossing = None
    trip = log_v_thresh + guard
    # Counts trials with T != 1 that entered the sum; zero means log_v is exact.
    nonunit = 0
    unit = logt == 0
    for chunk in _chunks(trials):
        if crossing is not None:
            bad = np.flatnonzero(chunk >= 16)
            if bad.size:
                raise ValidationError(f"invalid trial code at trial index {n + int(bad[0])}")
            n += chunk.size
            continue
        try:
            total, comp, hit = kernels.accumulate_codes(np.ascontiguousarray(chunk), logt, total, comp, adaptive, trip)
        except ValueError as exc:
            off = int(str(exc).rsplit(" ", 1)[-1])
            raise ValidationError(f"invalid trial code at trial index {n + off}") from None
        used = chunk if hit < 0 else chunk[: hit + 1]
        nonunit += int(np.count_nonzero(~unit[used]))
        if hit >= 0:
            crossing = n + hit + 1
            rest = chunk[hit + 1 :]
            bad = np.flatnonzero(rest >= 16)
            if bad.size:
                raise ValidationError(f"invalid trial code at trial index {n + hit + 1 + int(bad[0])}")
        n += chunk.size
    log_v = total + comp
    diff = log_v - log_v_thresh
    marginal = abs(diff) <= guard
    # An exact tie (every contribution was ln 1 = 0) carries no rounding
    # doubt and passes as V >= v_thresh; any other result within the guard
    # band aborts.
    exact_tie = nonunit == 0 and diff == 0
    passed = diff > guard or exact_tie
    return EntropyRun(n, log_v, log_v_thresh, crossing, crossing is not None, passed, marginal and not exact_tie)


def log_v_thresh_upper(n: int, eps_p: float, m: float) -> float:
    """ln of the largest admissible threshold, (1 + 1.5 m)^n / eps_p."""
    return n * math.log1p(1.5 * m) - math.log(eps_p)


def delta_log2(n: int, eps_p: float, v_thresh: float, m: float, log_domain: bool = False) -> float:
    """-log2 delta with delta = [1 + (1 - (eps_p v_thresh)^(1/n)) / (2m)]^n.

    With log_domain=True, v_thresh is given as ln v_thresh.
    """
    if not n >= 1:
        raise ValueError("n must be at least 1")
    if not 0 < eps_p < 1:
        raise ValueError("eps_p must lie in (0, 1)")
    if not m > 0:
        raise ValueError("m must be positive")
    log_v = float(v_thresh) if log_domain else math.log(v_thresh)
    if log_v < 0:
        raise ValueError("v_thresh below its lower bound 1")
    upper = log_v_thresh_upper(n, eps_p, m)
    if log_v > upper:
        raise ValueError("v_thresh above its upper bound (1 + 1.5 m)^n / eps_p")
    u = (math.log(eps_p) + log_v) / n
    z = -math.expm1(u) / (2 * m)
    return -n * math.log1p(z) / math.log(2)


def lemma_prob_bound(P: JointDistribution, T: BellFunction) -> float:
    """1 + (1 - E(T)_P) / (2m): bound on every conditional probability P(ab|xy)."""
    if T.m <= 0:
        raise ValueError("m must be positive")
    p = P.p if isinstance(P, JointDistribution) else np.asarray(P)
    return 1 + (1 - expectation(T.t_values, p)) / (2 * T.m)
