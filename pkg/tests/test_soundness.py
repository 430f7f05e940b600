import math

import pytest
from hypothesis import given, strategies as st

from bellrand.entropy import delta_log2
from bellrand.soundness import (
    ProtocolParams,
    error_split,
    extractor_eps,
    extractor_sigma,
    final_errors,
    length_rhs,
    max_extractable_bits,
    soundness_rhs_bound,
    tmps_admissible,
)

N5 = 55110210


def test_production_parameters():
    nl = delta_log2(N5, 9.025e-25, 1.5e32, 0.0100425)
    assert max_extractable_bits(nl, 9.5e-13, 5e-14) >= 1024
    pp = ProtocolParams.derive(N5, math.log(1.5e32), 0.0100425, 9.025e-25, 9.5e-13, 5e-14, 1024)
    assert (pp.t, pp.w, pp.d, pp.q) == (1024, 281, 315844, 2 * N5)
    assert pp.eps_1bit == 2.5e-14


def test_error_split():
    eps_p, kappa, eps_ext = error_split(1e-12)
    assert math.isclose(eps_p, 9.025e-25, rel_tol=1e-12)
    assert math.isclose(kappa, 9.5e-13, rel_tol=1e-12)
    assert math.isclose(eps_ext, 5e-14, rel_tol=1e-12)
    fin, ideal = final_errors(eps_p, kappa, eps_ext)
    assert math.isclose(fin, 1e-12, rel_tol=1e-12)
    assert math.isclose(ideal, 9.5e-13, rel_tol=1e-12)
    with pytest.raises(ValueError):
        error_split(1.0)


@given(st.floats(1e-15, 0.9))
def test_error_split_recovers_eps_fin(e):
    assert math.isclose(final_errors(*error_split(e))[0], e, rel_tol=1e-12)


def bits_oracle(rhs):
    t = 0
    while (t + 1) + 4 * math.log2(t + 1) <= rhs:
        t += 1
    return t


@given(st.floats(0, 3000), st.floats(1e-12, 0.5), st.floats(1e-14, 0.5))
def test_max_bits_against_linear_scan(nl, kappa, eps_ext):
    rhs = length_rhs(nl, kappa, eps_ext)
    assert max_extractable_bits(nl, kappa, eps_ext) == bits_oracle(rhs)


def test_planned_bits_admissible_for_extractor():
    # The output-length condition implies the extractor's own admissibility condition.
    for nl in (200, 1344.9, 5000):
        kappa, eps_ext = 9.5e-7, 5e-8
        t = max_extractable_bits(nl, kappa, eps_ext)
        assert tmps_admissible(t, extractor_sigma(nl, kappa, eps_ext), extractor_eps(eps_ext))


def test_soundness_rhs_example():
    assert math.isclose(soundness_rhs_bound(1e-4, 0.5, 1e-5), 2.1e-4)
    with pytest.raises(ValueError):
        soundness_rhs_bound(1e-4, 0.0, 1e-5)


def test_params_validation():
    pp = ProtocolParams.derive(N5, math.log(1.5e32), 0.0100425, 9.025e-25, 9.5e-13, 5e-14)
    assert pp.t == 1033
    with pytest.raises(ValueError):
        ProtocolParams.derive(N5, math.log(1.5e32), 0.0100425, 9.025e-25, 9.5e-13, 5e-14, 2000)
    d = pp.to_dict()
    d["q"] += 1
    with pytest.raises(ValueError):
        ProtocolParams(**d)


def test_no_bits_when_threshold_trivial():
    with pytest.raises(ValueError, match="no output bits"):
        ProtocolParams.derive(1000, 0.0, 0.01, 1e-12, 1e-6, 5e-8)
