# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops; see _kernels_py for the reference."""

import numpy as np

from cython.parallel cimport parallel, prange
from libc.math cimport fabs
from libc.stdint cimport uint8_t, uint64_t
from libc.stdlib cimport free, malloc


def accumulate_codes(const uint8_t[::1] codes, const double[::1] logt, double total,
                     double comp, bint adaptive, double log_thresh):
    cdef Py_ssize_t i, n = codes.shape[0]
    cdef Py_ssize_t crossing = -1, bad = -1
    cdef double v, t
    cdef uint8_t c
    if logt.shape[0] < 16:
        raise ValueError("log table needs 16 entries")
    with nogil:
        for i in range(n):
            c = codes[i]
            if c >= 16:
                bad = i
                break
            v = logt[c]
            t = total + v
            if fabs(total) >= fabs(v):
                comp += (total - t) + v
            else:
                comp += (v - t) + total
            total = t
            if adaptive and total + comp > log_thresh:
                crossing = i
                break
    if bad >= 0:
        raise ValueError(f"invalid trial code {codes[bad]} at offset {bad}")
    return total, comp, crossing


cdef inline void _mulx(uint64_t* v, const uint64_t* modulus, Py_ssize_t W, int l) noexcept nogil:
    cdef Py_ssize_t k
    cdef uint64_t carry = 0, nxt, top
    cdef int word = l >> 6, bit = l & 63
    for k in range(W):
        nxt = v[k] >> 63
        v[k] = (v[k] << 1) | carry
        carry = nxt
    if word < W:
        top = (v[word] >> bit) & 1
        v[word] &= ~((<uint64_t>1) << bit)
    else:
        top = carry
    if top:
        for k in range(W):
            v[k] ^= modulus[k]


cdef void _horner_one(uint64_t* acc, const uint64_t[:, ::1] coeffs, const uint64_t* alpha,
                      const uint64_t* modulus, Py_ssize_t W, int l,
                      uint64_t* table, uint64_t* cur, uint64_t* res) noexcept nogil:
    cdef int nbytes = (l + 7) >> 3
    cdef Py_ssize_t j, k, v, low, s = coeffs.shape[0]
    cdef int bj, pos
    cdef uint64_t* row
    cdef uint64_t* prev
    cdef uint64_t* ent
    # table[(bj*256 + v)*W + k]: alpha * (v x^(8 bj)) mod p; first the single-bit
    # entries from repeated multiplication by x, then all bytes by linearity.
    for k in range(nbytes * 256 * W):
        table[k] = 0
    for k in range(W):
        cur[k] = alpha[k]
    for pos in range(l):
        row = table + ((pos >> 3) * 256 + (1 << (pos & 7))) * W
        for k in range(W):
            row[k] = cur[k]
        _mulx(cur, modulus, W, l)
    for bj in range(nbytes):
        for v in range(3, 256):
            low = v & -v
            if low == v:
                continue
            row = table + (bj * 256 + v) * W
            prev = table + (bj * 256 + (v ^ low)) * W
            ent = table + (bj * 256 + low) * W
            for k in range(W):
                row[k] = prev[k] ^ ent[k]
    for j in range(s):
        for k in range(W):
            res[k] = coeffs[j, k]
        for bj in range(nbytes):
            v = (acc[bj >> 3] >> ((bj & 7) << 3)) & 0xFF
            if v:
                ent = table + (bj * 256 + v) * W
                for k in range(W):
                    res[k] ^= ent[k]
        for k in range(W):
            acc[k] = res[k]


def rsh_update(uint64_t[:, ::1] acc, const uint64_t[:, ::1] coeffs, const uint64_t[:, ::1] alphas,
               const uint64_t[::1] modulus, int l, int num_threads=0):
    """In-place Horner update acc_i <- acc_i * alpha_i + c over all coefficients."""
    cdef Py_ssize_t t = acc.shape[0], W = acc.shape[1], i
    cdef int nbytes = (l + 7) >> 3
    cdef uint64_t* table
    cdef uint64_t* cur
    cdef uint64_t* res
    if coeffs.shape[1] != W or alphas.shape[0] != t or alphas.shape[1] != W or modulus.shape[0] != W:
        raise ValueError("inconsistent word counts")
    if l <= 0 or l > 64 * W:
        raise ValueError("field degree does not fit the word layout")
    if t == 0 or coeffs.shape[0] == 0:
        return np.asarray(acc)
    if num_threads <= 0:
        num_threads = 1
    with nogil, parallel(num_threads=num_threads):
        table = <uint64_t*> malloc(nbytes * 256 * W * sizeof(uint64_t))
        cur = <uint64_t*> malloc(W * sizeof(uint64_t))
        res = <uint64_t*> malloc(W * sizeof(uint64_t))
        for i in prange(t, schedule="dynamic"):
            _horner_one(&acc[i, 0], coeffs, &alphas[i, 0], &modulus[0], W, l, table, cur, res)
        free(table)
        free(cur)
        free(res)
    return np.asarray(acc)


def parity_dot(const uint64_t[:, ::1] acc, const uint64_t[:, ::1] betas):
    cdef Py_ssize_t t = acc.shape[0], W = acc.shape[1], i, k
    cdef uint64_t v
    out = np.zeros(t, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    with nogil:
        for i in range(t):
            v = 0
            for k in range(W):
                v ^= acc[i, k] & betas[i, k]
            v ^= v >> 32
            v ^= v >> 16
            v ^= v >> 8
            v ^= v >> 4
            v ^= v >> 2
            v ^= v >> 1
            o[i] = v & 1
    return out
