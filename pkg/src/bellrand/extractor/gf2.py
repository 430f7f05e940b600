"""Arithmetic in GF(2)[x] and GF(2^l) on Python integers.

Polynomials are integers whose bit k is the coefficient of x^k. This module
is the bignum reference for the word-level kernels and picks the fixed
reduction polynomial for each field degree.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2)[x] polynomials."""
    if a.bit_length() < b.bit_length():
        a, b = b, a
    out = 0
    while b:
        low = b & -b
        out ^= a << (low.bit_length() - 1)
        b ^= low
    return out


def poly_mod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(f: int) -> bool:
    """Rabin's test for irreducibility over GF(2)."""
    n = f.bit_length() - 1
    if n < 1:
        return False
    if n == 1:
        return True

    def frobenius(k: int) -> int:
        # x^(2^k) mod f by k successive squarings.
        r = 2
        for _ in range(k):
            r = poly_mod(clmul(r, r), f)
        return r

    if frobenius(n) != poly_mod(2, f):
        return False
    for p in _prime_factors(n):
        h = frobenius(n // p) ^ 2
        if poly_gcd(f, h) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def irreducible_poly(l: int) -> int:
    """Lowest-weight irreducible polynomial of degree l.

    Trinomials x^l + x^k + 1 are tried with k increasing; failing those,
    pentanomials x^l + x^k3 + x^k2 + x^k1 + 1 with (k3, k2, k1) in increasing
    lexicographic order. Degree 1 uses x + 1.
    """
    if l < 1:
        raise ValueError("field degree must be at least 1")
    if l == 1:
        return 0b11
    top = 1 << l
    for k in range(1, l):
        f = top | (1 << k) | 1
        if is_irreducible(f):
            return f
    for k3 in range(3, l):
        for k2 in range(2, k3):
            for k1 in range(1, k2):
                f = top | (1 << k3) | (1 << k2) | (1 << k1) | 1
                if is_irreducible(f):
                    return f
    raise RuntimeError(f"no trinomial or pentanomial of degree {l} is irreducible")


def poly_terms(f: int) -> list[int]:
    """Exponents present in f, highest first."""
    return [k for k in range(f.bit_length() - 1, -1, -1) if (f >> k) & 1]


class GF2Field:
    """GF(2^l) with the fixed reduction polynomial for l."""

    def __init__(self, l: int):
        self.l = l
        self.poly = irreducible_poly(l)
        self.words = (l + 63) // 64

    def mul(self, a: int, b: int) -> int:
        return poly_mod(clmul(a, b), self.poly)

    def pow(self, a: int, e: int) -> int:
        r = 1
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def horner(self, coeffs, alpha: int) -> int:
        """Evaluate sum c_i alpha^(s-1-i), coefficients given highest power first."""
        acc = 0
        for c in coeffs:
            acc = self.mul(acc, alpha) ^ c
        return acc

    @property
    def modulus_words(self) -> np.ndarray:
        """Reduction polynomial without its x^l term, as little-endian uint64 words."""
        return to_words(self.poly ^ (1 << self.l), self.words)


def to_words(v: int, words: int) -> np.ndarray:
    return np.array([(v >> (64 * k)) & 0xFFFFFFFFFFFFFFFF for k in range(words)], dtype=np.uint64)


def from_words(arr) -> int:
    return sum(int(w) << (64 * k) for k, w in enumerate(arr))


def parity(v: int) -> int:
    return bin(v).count("1") & 1
