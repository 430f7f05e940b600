import math

import numpy as np
import pytest

from bellrand.extractor.design import (
    field_prime,
    is_prime,
    log2_ceil_ratio,
    next_prime_above,
    overlap_sums,
    seed_bound,
    seed_length,
    weak_design,
)


def test_is_prime_matches_sieve():
    N = 20000
    sieve = np.ones(N, bool)
    sieve[:2] = False
    for p in range(2, int(N**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    assert [is_prime(k) for k in range(N)] == sieve.tolist()
    assert is_prime(2**61 - 1) and not is_prime(2**61 + 1)


def test_next_prime_above():
    assert next_prime_above(280) == 281
    assert next_prime_above(281) == 283
    assert next_prime_above(14) == 17


def test_log2_ceil_ratio_exact():
    # 4 q t^2 / eps^2 with q = 2n, t = 1024, eps = 2.5e-14.
    L = log2_ceil_ratio(110220420, 1024, 2.5e-14)
    assert L == 140
    assert log2_ceil_ratio(1, 1, 1) == 2
    assert log2_ceil_ratio(2, 1, 1) == 3


def test_seed_length_production():
    assert field_prime(110220420, 1024, 2.5e-14) == 281
    assert seed_length(110220420, 1024, 2.5e-14) == (281, 315844)


def test_single_set():
    d = weak_design(1, 7)
    assert d.d == 49
    assert d.sets().tolist() == [list(range(7))]


def brute_overlaps(sets):
    out = []
    for i in range(len(sets)):
        si = set(sets[i].tolist())
        out.append(sum(2 ** len(si & set(sets[j].tolist())) for j in range(i)))
    return np.array(out, dtype=float)


@pytest.mark.parametrize("w", [3, 5, 7, 11, 13])
def test_overlap_bound_exhaustive(w):
    for t in range(1, 65):
        D = weak_design(t, w)
        sets = D.sets()
        assert sets.shape == (t, w)
        assert sets.min() >= 0 and sets.max() < D.d
        for row in sets:
            assert len(set(row.tolist())) == w
        A = overlap_sums(sets, D.d)
        assert np.array_equal(A, brute_overlaps(sets))
        assert np.all(A <= t)
        assert D.d <= seed_bound(t, w)


def test_production_design_overlaps():
    D = weak_design(1024, 281)
    A = overlap_sums(D.sets(), D.d)
    assert A.max() <= 1024
    assert D.block_sizes == (376, 238, 150, 260)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        weak_design(0, 5)
    with pytest.raises(ValueError):
        weak_design(3, 9)
    with pytest.raises(ValueError):
        seed_length(4, 8, 0.1)
