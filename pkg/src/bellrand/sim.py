"""Synthetic i.i.d. trial streams for desk validation.

Not a source of certified randomness: the generator is a seeded Philox
counter-based PRNG, chosen because its streams are reproducible across runs
and platforms and split cleanly by trial-index range.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np
from scipy import stats as sps

from bellrand.core import CELL_TO_CODE, JointDistribution, records_from_codes

__all__ = ["CHUNK", "simulate", "simulate_codes", "simulate_records", "lr_exceedance_probability"]

# Trials per generator block; block k always uses Philox stream k.
CHUNK = 1 << 20


def _joint(Q: JointDistribution, settings) -> np.ndarray:
    cond = Q.conditional() if isinstance(Q, JointDistribution) else np.asarray(Q, float)
    if settings is None:
        s = Q.settings() if isinstance(Q, JointDistribution) else np.full(4, 0.25)
    else:
        s = np.asarray(getattr(settings, "q", settings), dtype=float).ravel()
    if s.shape != (4,) or np.any(s < 0) or abs(math.fsum(s) - 1) > 1e-12:
        raise ValueError("settings must be a distribution over the 4 setting pairs")
    return (cond * s[:, None]).ravel()


def _block(cdf: np.ndarray, seed: int, k: int, size: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed).jumped(k))
    u = gen.random(size)
    cells = np.searchsorted(cdf, u, side="right")
    np.minimum(cells, 15, out=cells)
    return CELL_TO_CODE[cells]


def simulate(Q: JointDistribution, settings, n: int, rng_seed: int, start: int = 0,
             chunk: int = CHUNK) -> Iterator[np.ndarray]:
    """Yield trial codes for trials start..n-1 as uint8 arrays.

    Trial i is generated by Philox block i // CHUNK, so any index range can be
    produced independently and the concatenation never depends on how the
    range is split.
    """
    if n < 0 or start < 0:
        raise ValueError("n and start must be non-negative")
    p = _joint(Q, settings)
    # With side="right", a cell of zero probability can never be selected.
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    i = start
    while i < n:
        k, off = divmod(i, CHUNK)
        size = min(CHUNK, n - k * CHUNK)
        block = _block(cdf, rng_seed, k, size)
        while off < size:
            hi = min(size, off + chunk)
            yield block[off:hi]
            off = hi
        i = k * CHUNK + size


def simulate_codes(Q, settings, n: int, rng_seed: int, start: int = 0) -> np.ndarray:
    parts = list(simulate(Q, settings, start + n, rng_seed, start))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def simulate_records(Q, settings, n: int, rng_seed: int):
    return records_from_codes(simulate_codes(Q, settings, n, rng_seed))


def lr_exceedance_probability(n: int, threshold_mean: float, method: str = "exact") -> float:
    """P(K/n > threshold_mean) for K ~ Binomial(n, 3/4).

    method="exact" evaluates the binomial tail (regularized incomplete beta);
    method="normal" uses the continuity-corrected normal approximation.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < threshold_mean < 1:
        raise ValueError("threshold must lie in (0, 1)")
    k = math.floor(n * threshold_mean)
    # K > n*thr  <=>  K >= k + 1
    if method == "exact":
        return float(sps.binom.sf(k, n, 0.75))
    if method == "normal":
        z = (k + 0.5 - 0.75 * n) / math.sqrt(n * 0.1875)
        return 0.5 * math.erfc(z / math.sqrt(2))
    raise ValueError(f"unknown method {method!r}")
