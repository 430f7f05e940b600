"""Reed-Solomon-Hadamard one-bit extractor and Trevisan-style extraction.

For a w-bit sub-seed, the field is GF(2^l) with l = floor(w/2). The first
ceil(w/2) sub-seed bits select the evaluation point alpha (its first l bits
are used) and the last floor(w/2) bits form the inner-product vector beta.
The q-bit input is cut into s = ceil(q/l) coefficients of l bits (the last
one zero-padded, bit j of a block has weight x^j). The first coefficient
multiplies the highest power of alpha. The output bit is the parity of
beta AND x(alpha).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from bellrand import _backend
from bellrand.extractor.design import WeakDesign, field_prime, is_prime, overlap_sums, weak_design
from bellrand.extractor.gf2 import GF2Field, parity

__all__ = ["ExtractorSpec", "RSHStream", "extract", "rsh_bit", "bits_to_words"]


@dataclass(frozen=True)
class ExtractorSpec:
    q: int
    t: int
    w: int
    eps_1bit: float | None = None
    design: WeakDesign = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.q >= 1 and self.t >= 1):
            raise ValueError("q and t must be positive")
        if not is_prime(self.w):
            raise ValueError(f"w={self.w} is not prime")
        if self.w < 3:
            raise ValueError("w must be at least 3 so that the field degree is positive")
        object.__setattr__(self, "design", weak_design(self.t, self.w))

    @classmethod
    def build(cls, q: int, t: int, eps_1bit: float) -> "ExtractorSpec":
        if not (q >= t >= 1):
            raise ValueError("need q >= t >= 1")
        if not 0 < eps_1bit < 1:
            raise ValueError("eps_1bit must lie in (0, 1)")
        return cls(q, t, field_prime(q, t, eps_1bit), float(eps_1bit))

    @property
    def d(self) -> int:
        return self.design.d

    @property
    def l(self) -> int:
        return self.w // 2

    @property
    def alpha_offset(self) -> int:
        return 0

    @property
    def beta_offset(self) -> int:
        return (self.w + 1) // 2

    @property
    def blocks(self) -> int:
        """Number of l-bit input coefficients."""
        return -(-self.q // self.l)

    @property
    def words(self) -> int:
        return (self.l + 63) // 64

    @property
    def field(self) -> GF2Field:
        return GF2Field(self.l)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "t": self.t,
            "w": self.w,
            "d": self.d,
            "eps_1bit": self.eps_1bit,
            "field_degree": self.l,
            "field_poly": self.field.poly,
            "block_sizes": list(self.design.block_sizes),
            "block_degrees": list(self.design.degrees),
        }

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def collision_slack(self) -> float:
        """eta = (s-1)/2^l: excess collision probability of the one-bit family."""
        return (self.blocks - 1) / 2.0**self.l

    def error_bound(self, min_entropy: float) -> float:
        """Classical strong-extractor error for a source of the given min-entropy.

        Sum over output bits of (1/2) sqrt(2^(1 - k + A_i) + eta), with A_i the
        design overlap sum; each term is the leftover-hash bound for bit i
        given the advice the earlier bits leak.
        """
        A = overlap_sums(self.design.sets(), self.d)
        eta = self.collision_slack()
        return float(sum(0.5 * math.sqrt(2.0 ** (1 - min_entropy + a) + eta) for a in A))

    def subseeds(self, seed_bits) -> tuple[np.ndarray, np.ndarray]:
        """(alphas, betas) as (t, W) uint64 arrays for the given seed."""
        seed = np.asarray(seed_bits, dtype=np.uint8)
        if seed.shape != (self.d,):
            raise ValueError(f"seed has {seed.size} bits, expected {self.d}")
        sub = seed[self.design.sets()]
        alphas = bits_to_words(sub[:, self.alpha_offset : self.alpha_offset + self.l], self.words)
        betas = bits_to_words(sub[:, self.beta_offset : self.beta_offset + self.l], self.words)
        return alphas, betas


def bits_to_words(bits, words: int) -> np.ndarray:
    """Rows of little-endian bits to rows of little-endian uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    rows, n = bits.shape
    padded = np.zeros((rows, 64 * words), dtype=np.uint8)
    padded[:, :n] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64).reshape(rows, words)


class RSHStream:
    """Incremental extraction: feed input bits in any chunking, then finish."""

    def __init__(self, spec: ExtractorSpec, seed_bits, backend: str | None = None, num_threads: int | None = None):
        self.spec = spec
        self.kernels = _backend.get(backend)
        self.alphas, self.betas = spec.subseeds(seed_bits)
        self.acc = np.zeros((spec.t, spec.words), dtype=np.uint64)
        self.modulus = spec.field.modulus_words
        self.pending = np.zeros(0, dtype=np.uint8)
        self.consumed = 0
        self.num_threads = num_threads if num_threads is not None else min(8, os.cpu_count() or 1)

    def _run(self, coeffs):
        if coeffs.shape[0] == 0:
            return
        self.kernels.rsh_update(self.acc, coeffs, self.alphas, self.modulus, self.spec.l, self.num_threads)

    def feed(self, bits) -> None:
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        if np.any(bits > 1):
            raise ValueError("input bits must be 0 or 1")
        if self.consumed + bits.size > self.spec.q:
            raise ValueError(f"input longer than q={self.spec.q} bits")
        self.consumed += bits.size
        l = self.spec.l
        buf = np.concatenate([self.pending, bits]) if self.pending.size else bits
        full = (buf.size // l) * l
        if full:
            self._run(bits_to_words(buf[:full].reshape(-1, l), self.spec.words))
        self.pending = buf[full:].copy()

    def finish(self) -> np.ndarray:
        if self.consumed != self.spec.q:
            raise ValueError(f"input has {self.consumed} bits, expected q={self.spec.q}")
        if self.pending.size:
            last = np.zeros((1, self.spec.l), dtype=np.uint8)
            last[0, : self.pending.size] = self.pending
            self._run(bits_to_words(last, self.spec.words))
            self.pending = np.zeros(0, dtype=np.uint8)
        return self.kernels.parity_dot(self.acc, self.betas)


def extract(input_bits, seed_bits, spec: ExtractorSpec, backend: str | None = None,
            chunk_bits: int = 1 << 22) -> np.ndarray:
    """t output bits from a q-bit input and a d-bit seed."""
    bits = np.asarray(input_bits, dtype=np.uint8).ravel()
    if bits.size != spec.q:
        raise ValueError(f"input has {bits.size} bits, expected q={spec.q}")
    stream = RSHStream(spec, seed_bits, backend)
    step = max(spec.l, (chunk_bits // spec.l) * spec.l)
    for lo in range(0, bits.size, step):
        stream.feed(bits[lo : lo + step])
    return stream.finish()


def rsh_bit(field: GF2Field, input_bits, alpha: int, beta: int) -> int:
    """Bignum evaluation of one output bit (reference implementation)."""
    l = field.l
    bits = [int(b) for b in input_bits]
    coeffs = []
    for lo in range(0, len(bits), l):
        chunk = bits[lo : lo + l]
        coeffs.append(sum(b << j for j, b in enumerate(chunk)))
    return parity(field.horner(coeffs, alpha) & beta)
