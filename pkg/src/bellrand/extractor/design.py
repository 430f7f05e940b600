"""Seed-length calculator and block weak design.

A basic design lives on a w x w grid (w prime) and assigns to each set the
graph {(a, p(a)) : a in Z_w} of a polynomial p over Z_w; grid point (a, v)
is seed bit v*w + a. Two polynomials of degree at most c agree on at most c
points, and listing polynomials with the highest coefficient varying slowest
keeps sum_{j<i} 2^|S_i cap S_j| below e*i inside a block. Blocks occupy
disjoint stretches of w^2 seed bits. Each block takes as many sets as the
remaining overlap budget allows, and a last block of constant polynomials
(pairwise disjoint sets) absorbs the rest. The result satisfies
sum_{j<i} 2^|S_i cap S_j| <= t - 1 for every i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

E = math.e

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin; exact for n < 3.3e24 (covers all 64-bit n)."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime_above(n: int) -> int:
    k = n + 1
    while not is_prime(k):
        k += 1
    return k


def log2_ceil_ratio(q: int, t: int, eps) -> int:
    """Smallest integer L with 2^L >= 4 q t^2 / eps^2, in exact rational arithmetic."""
    target = Fraction(4 * q * t * t) / Fraction(eps) ** 2
    L = max(0, target.numerator.bit_length() - target.denominator.bit_length() - 1)
    while Fraction(2) ** L < target:
        L += 1
    while L > 0 and Fraction(2) ** (L - 1) >= target:
        L -= 1
    return L


def field_prime(q: int, t: int, eps) -> int:
    """w: the smallest prime larger than 2 * ceil(log2(4 q t^2 / eps^2))."""
    return next_prime_above(2 * log2_ceil_ratio(q, t, eps))


def big_block_count(t: int, w: int) -> int:
    """Number of overlapping blocks before the final disjoint block."""
    if t <= w:
        return 0
    ratio = (math.log2(t - E) - math.log2(w - E)) / (math.log2(E) - math.log2(E - 1))
    return max(1, math.ceil(ratio))


def seed_bound(t: int, w: int) -> int:
    """w^2 * max{2, 1 + ceil((log2(t-e) - log2(w-e)) / (log2 e - log2(e-1)))}."""
    if t <= E:
        return 2 * w * w
    ratio = (math.log2(t - E) - math.log2(w - E)) / (math.log2(E) - math.log2(E - 1))
    return w * w * max(2, 1 + math.ceil(ratio))


def _block_sizes(t: int, w: int) -> list[int]:
    nbig = big_block_count(t, w)
    sizes, remaining = [], t
    for _ in range(nbig):
        n = max(0, min(remaining, math.ceil(remaining / E - 1)))
        sizes.append(n)
        remaining -= n
    if remaining > w:
        raise AssertionError("final block cannot hold the remaining sets")
    sizes.append(remaining)
    return sizes


@dataclass(frozen=True)
class WeakDesign:
    t: int
    w: int
    block_sizes: tuple[int, ...]
    degrees: tuple[int, ...]

    @property
    def blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def d(self) -> int:
        return self.blocks * self.w * self.w

    def sets(self) -> np.ndarray:
        """Array of shape (t, w); row i lists S_i ordered by evaluation point a."""
        w = self.w
        a = np.arange(w, dtype=np.int64)
        out = np.empty((self.t, w), dtype=np.int64)
        row = 0
        for k, (n, c) in enumerate(zip(self.block_sizes, self.degrees)):
            base = k * w * w
            for idx in range(n):
                # Base-w digits of idx are the coefficients c_0..c_deg (c_0 lowest).
                vals = np.zeros(w, dtype=np.int64)
                coeff_idx, power = idx, np.ones(w, dtype=np.int64)
                for _ in range(c + 1):
                    coeff_idx, digit = divmod(coeff_idx, w)
                    vals = (vals + digit * power) % w
                    power = power * a % w
                out[row] = base + vals * w + a
                row += 1
        return out

    def block_of(self, i: int) -> int:
        return int(np.searchsorted(np.cumsum(self.block_sizes), i, side="right"))


def weak_design(t: int, w: int) -> WeakDesign:
    if t < 1:
        raise ValueError("t must be at least 1")
    if not is_prime(w):
        raise ValueError(f"w={w} is not prime")
    sizes = _block_sizes(t, w)
    degrees = []
    for n in sizes:
        c = 0
        while w ** (c + 1) < n:
            c += 1
        if c >= w:
            raise ValueError("polynomial degree reached the field size")
        degrees.append(c)
    return WeakDesign(t, w, tuple(sizes), tuple(degrees))


def seed_length(q: int, t: int, eps_1bit) -> tuple[int, int]:
    """(w, d): the field prime and the exact seed consumption of the design."""
    if not (q >= t >= 1):
        raise ValueError("need q >= t >= 1")
    if not 0 < eps_1bit < 1:
        raise ValueError("eps_1bit must lie in (0, 1)")
    w = field_prime(q, t, eps_1bit)
    return w, weak_design(t, w).d


def overlap_sums(sets: np.ndarray, d: int) -> np.ndarray:
    """A_i = sum_{j<i} 2^|S_i cap S_j| for every i, via a sparse incidence product."""
    from scipy.sparse import csr_matrix

    t, w = sets.shape
    inc = csr_matrix((np.ones(t * w, dtype=np.int32), sets.ravel(), np.arange(t + 1) * w), shape=(t, d))
    inter = (inc @ inc.T).tocoo()
    lower = inter.row > inter.col
    sums = np.zeros(t)
    np.add.at(sums, inter.row[lower], np.exp2(inter.data[lower].astype(float)))
    # Earlier sets that miss S_i entirely still contribute 2^0 each.
    hits = np.bincount(inter.row[lower], minlength=t)
    return sums + (np.arange(t) - hits)
