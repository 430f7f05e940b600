"""Pure numpy implementations of the hot loops.

Mirrors the compiled module `_kernels` function for function. Field elements
of GF(2^l) are stored as rows of W little-endian uint64 words.
"""

from __future__ import annotations

import math

import numpy as np

_BATCH = 64


def _neumaier(total, comp, v):
    t = total + v
    if abs(total) >= abs(v):
        comp += (total - t) + v
    else:
        comp += (v - t) + total
    return t, comp


def accumulate_codes(codes, logt, total, comp, adaptive, log_thresh):
    """Compensated running sum of logt[code] over a chunk of trial codes.

    Returns (total, comp, crossing) where crossing is the 0-based offset of the
    trial at which the running sum first exceeded log_thresh (adaptive mode
    only, the remainder of the chunk is then ignored) or -1.
    """
    codes = np.asarray(codes, dtype=np.uint8)
    logt = np.asarray(logt, dtype=np.float64)
    bad = np.flatnonzero(codes >= 16)
    if bad.size:
        raise ValueError(f"invalid trial code {int(codes[bad[0]])} at offset {int(bad[0])}")
    if codes.size == 0:
        return total, comp, -1
    if adaptive:
        running = (total + comp) + np.cumsum(logt[codes])
        hits = np.flatnonzero(running > log_thresh)
        start = int(hits[0]) if hits.size else codes.size
        # The cumulative sum is only a locator: confirm with an exact prefix sum
        # and step forward or back until the first true crossing is found.
        k = start
        while k > 0 and _prefix(codes, logt, total, comp, k - 1) > log_thresh:
            k -= 1
        while k < codes.size and _prefix(codes, logt, total, comp, k) <= log_thresh:
            k += 1
        if k < codes.size:
            counts = np.bincount(codes[: k + 1], minlength=16)
            total, comp = _neumaier(total, comp, math.fsum(counts * logt))
            return total, comp, k
    counts = np.bincount(codes, minlength=16)
    total, comp = _neumaier(total, comp, math.fsum(counts * logt))
    return total, comp, -1


def _prefix(codes, logt, total, comp, k):
    counts = np.bincount(codes[: k + 1], minlength=16)
    t, c = _neumaier(total, comp, math.fsum(counts * logt))
    return t + c


def _mulx(v, modulus, l):
    """Multiply a batch of field elements (rows) by x modulo the field polynomial."""
    out = v << np.uint64(1)
    out[:, 1:] |= v[:, :-1] >> np.uint64(63)
    word, bit = divmod(l, 64)
    if word < v.shape[1]:
        top = (out[:, word] >> np.uint64(bit)) & np.uint64(1)
        out[:, word] &= ~(np.uint64(1) << np.uint64(bit))
    else:
        top = (v[:, -1] >> np.uint64(63)) & np.uint64(1)
    out ^= np.where(top[:, None].astype(bool), modulus[None, :], np.uint64(0))
    return out


def mul_tables(alphas, modulus, l):
    """Byte-window tables for multiplication by each alpha.

    tables[i, j, v] = alpha_i * (v * x^(8j)) mod p, shape (b, nbytes, 256, W).
    """
    alphas = np.asarray(alphas, dtype=np.uint64)
    b, W = alphas.shape
    nbytes = (l + 7) // 8
    basis = np.zeros((b, 8 * nbytes, W), dtype=np.uint64)
    cur = alphas.copy()
    for k in range(l):
        basis[:, k] = cur
        cur = _mulx(cur, modulus, l)
    tab = np.zeros((b, nbytes, 256, W), dtype=np.uint64)
    for v in range(1, 256):
        low = v & -v
        tab[:, :, v] = tab[:, :, v ^ low] ^ basis[:, low.bit_length() - 1 :: 8][:, :nbytes]
    return tab


def rsh_update(acc, coeffs, alphas, modulus, l, num_threads=0):
    """Horner step acc <- acc * alpha + c over all rows of coeffs, in place.

    num_threads is accepted for signature parity with the compiled kernel.
    """
    acc_arr = np.asarray(acc)
    coeffs = np.asarray(coeffs, dtype=np.uint64)
    alphas = np.asarray(alphas, dtype=np.uint64)
    modulus = np.asarray(modulus, dtype=np.uint64)
    t, W = acc_arr.shape
    nbytes = (l + 7) // 8
    shifts = [np.uint64(8 * (j % 8)) for j in range(nbytes)]
    mask = np.uint64(0xFF)
    for lo in range(0, t, _BATCH):
        hi = min(t, lo + _BATCH)
        tab = mul_tables(alphas[lo:hi], modulus, l)
        rows = np.arange(hi - lo)
        a = acc_arr[lo:hi].copy()
        for c in coeffs:
            res = np.zeros_like(a)
            for j in range(nbytes):
                byte = ((a[:, j // 8] >> shifts[j]) & mask).astype(np.intp)
                res ^= tab[rows, j, byte]
            a = res ^ c
        acc_arr[lo:hi] = a
    return acc_arr


def parity_dot(acc, betas):
    """Parity of the bitwise AND of each accumulator with its beta."""
    v = np.bitwise_xor.reduce(np.asarray(acc, np.uint64) & np.asarray(betas, np.uint64), axis=1)
    return (np.bitwise_count(v) & 1).astype(np.uint8)
