import math
import warnings

import numpy as np
import pytest
from scipy import stats as sps

from bellrand.core import BellFunction, CountTable
from bellrand.pbr import compute_m
from bellrand.stats import (
    NoExpectedViolation,
    choose_threshold,
    log_stats,
    normal_two_tail,
    signaling_tests,
    tv_distance,
    two_proportion_z,
)
from conftest import TABLE_1, TABLE_S2

T1 = BellFunction(TABLE_1, compute_m(TABLE_1))


def test_threshold_rule_matches_published(s3):
    lv = choose_threshold(s3, T1, 55110210, 1.645)
    assert abs(lv - math.log(8.79e36)) <= 0.01 * math.log(8.79e36)


def test_threshold_formula(s3):
    mu, var = log_stats(s3, T1)
    p = s3.p.ravel()
    lt = np.log(TABLE_1).ravel()
    assert math.isclose(mu, float(np.dot(p, lt)), rel_tol=1e-12)
    assert math.isclose(var, float(np.dot(p, lt**2) - np.dot(p, lt) ** 2), rel_tol=1e-6)
    assert math.isclose(choose_threshold(s3, T1, 10**6, 2.0), 1e6 * mu - 2 * 1e3 * math.sqrt(var))


def test_no_violation_warns():
    from bellrand.core import deterministic_lr_points

    with pytest.warns(NoExpectedViolation):
        choose_threshold(deterministic_lr_points()[5], T1, 1000)


def test_two_proportion_z_against_scipy():
    # Pooled z equals the signed root of the 2x2 chi-square statistic without correction.
    rng = np.random.default_rng(0)
    for _ in range(50):
        n1, n2 = rng.integers(50, 5000, 2)
        k1, k2 = rng.integers(1, n1), rng.integers(1, n2)
        z = two_proportion_z(int(k1), int(n1), int(k2), int(n2))
        chi2 = sps.chi2_contingency([[k1, n1 - k1], [k2, n2 - k2]], correction=False)[0]
        assert math.isclose(z * z, chi2, rel_tol=1e-9)
        assert math.isclose(normal_two_tail(z), sps.norm.sf(abs(z)) * 2, rel_tol=1e-9, abs_tol=1e-300)


def test_signaling_tests_on_training_counts():
    res = signaling_tests(CountTable(TABLE_S2))
    assert len(res) == 4
    for r in res:
        assert 0 <= r.p_value <= 1
    # Test 1 compares P(a=+) between xy=00 and xy=01.
    N = TABLE_S2
    want = two_proportion_z(N[0, 0] + N[0, 1], N[0].sum(), N[1, 0] + N[1, 1], N[1].sum())
    assert res[0].z == want


def test_signaling_rows_and_zero_variance():
    N = np.zeros((4, 4), int)
    N[:, 3] = 100
    assert all(r.z == 0 and r.p_value == 1 for r in signaling_tests(CountTable(N)))


def test_tv_distance():
    assert tv_distance([0.5, 0.5], [1.0, 0.0]) == 0.5
    assert tv_distance({"a": 0.2, "b": 0.8}, {"b": 0.8, "a": 0.2}) == 0
    with pytest.raises(ValueError):
        tv_distance({"a": 1.0}, {"b": 1.0})
    with pytest.raises(ValueError):
        tv_distance([0.5, 0.6], [0.5, 0.5])
