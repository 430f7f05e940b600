"""Protocol parameter calculus: output length, extractor mapping, final errors."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

__all__ = [
    "ProtocolParams",
    "length_rhs",
    "max_extractable_bits",
    "error_split",
    "final_errors",
    "soundness_rhs_bound",
    "extractor_sigma",
    "extractor_eps",
    "tmps_admissible",
]


def length_rhs(neg_log2_delta: float, kappa: float, eps_ext: float) -> float:
    """Right side of t + 4 log2 t <= -log2 delta + log2 kappa + 5 log2 eps_ext - 11."""
    return neg_log2_delta + math.log2(kappa) + 5 * math.log2(eps_ext) - 11


def _cost(t: int) -> float:
    return t + 4 * math.log2(t)


def max_extractable_bits(neg_log2_delta: float, kappa: float, eps_ext: float) -> int:
    """Largest t >= 1 with t + 4 log2 t <= rhs, or 0 if none qualifies."""
    rhs = length_rhs(neg_log2_delta, kappa, eps_ext)
    if not math.isfinite(rhs) or rhs < 1:
        return 0
    lo, hi = 1, max(2, int(rhs) + 1)
    # cost(t) >= t, so hi always fails; bisect on the monotone cost.
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _cost(mid) <= rhs:
            lo = mid
        else:
            hi = mid
    return lo if _cost(lo) <= rhs else 0


def error_split(eps_fin: float) -> tuple[float, float, float]:
    """(eps_p, kappa, eps_ext) = ((0.95 e)^2, 0.95 e, 0.05 e)."""
    if not 0 < eps_fin < 1:
        raise ValueError("eps_fin must lie in (0, 1)")
    kappa = 0.95 * eps_fin
    return kappa * kappa, kappa, 0.05 * eps_fin


def final_errors(eps_p: float, kappa: float, eps_ext: float) -> tuple[float, float]:
    """(eps_fin, ideal_distance) = (max(eps_p/kappa + eps_ext, kappa), max(eps_p + eps_ext, kappa))."""
    for name, v in (("eps_p", eps_p), ("kappa", kappa), ("eps_ext", eps_ext)):
        if not 0 < v < 1:
            raise ValueError(f"{name} must lie in (0, 1)")
    return max(eps_p / kappa + eps_ext, kappa), max(eps_p + eps_ext, kappa)


def soundness_rhs_bound(eps_p: float, pass_prob: float, eps_ext: float) -> float:
    """eps_p / P(pass) + eps_ext: TV distance from uniform given a pass."""
    if not pass_prob > 0:
        raise ValueError("pass probability must be positive")
    return eps_p / pass_prob + eps_ext


def extractor_sigma(neg_log2_delta: float, kappa: float, eps_ext: float) -> float:
    """Min-entropy parameter handed to the extractor."""
    return neg_log2_delta + math.log2(kappa) + math.log2(eps_ext) - 1


def extractor_eps(eps_ext: float) -> float:
    """Per-construction extractor error parameter."""
    return eps_ext / 2


def tmps_admissible(t: int, sigma: float, eps_1bit: float) -> bool:
    """t + 4 log2 t <= sigma - 6 + 4 log2 eps_1bit."""
    return t >= 1 and _cost(t) <= sigma - 6 + 4 * math.log2(eps_1bit) + 1e-9


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    log_v_thresh: float
    eps_p: float
    eps_ext: float
    kappa: float
    t: int
    neg_log2_delta: float
    sigma: float
    eps_1bit: float
    q: int
    d: int
    w: int

    def __post_init__(self):
        for name in ("eps_p", "eps_ext", "kappa"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not (isinstance(self.t, int) and self.t >= 1):
            raise ValueError("t must be a positive integer")
        if _cost(self.t) > length_rhs(self.neg_log2_delta, self.kappa, self.eps_ext) + 1e-9:
            raise ValueError("t violates t + 4 log2 t <= -log2 delta + log2 kappa + 5 log2 eps_ext - 11")
        sigma = extractor_sigma(self.neg_log2_delta, self.kappa, self.eps_ext)
        if not math.isclose(self.sigma, sigma, rel_tol=1e-12, abs_tol=1e-9):
            raise ValueError("sigma does not match -log2 delta + log2 kappa + log2 eps_ext - 1")
        if not math.isclose(self.eps_1bit, self.eps_ext / 2, rel_tol=1e-15):
            raise ValueError("eps_1bit must equal eps_ext / 2")
        if self.q != 2 * self.n:
            raise ValueError("extractor input length must be 2n")

    @classmethod
    def derive(cls, n: int, log_v_thresh: float, m: float, eps_p: float, kappa: float,
               eps_ext: float, t: int | None = None) -> "ProtocolParams":
        from bellrand.entropy import delta_log2
        from bellrand.extractor.design import seed_length

        nl = delta_log2(n, eps_p, log_v_thresh, m, log_domain=True)
        tmax = max_extractable_bits(nl, kappa, eps_ext)
        t = tmax if t is None else t
        if t < 1:
            raise ValueError(f"no output bits are extractable (-log2 delta = {nl:.4g})")
        if t > tmax:
            raise ValueError(f"t={t} exceeds the admissible maximum {tmax}")
        eps_1bit = extractor_eps(eps_ext)
        w, d = seed_length(2 * n, t, eps_1bit)
        return cls(n, log_v_thresh, eps_p, eps_ext, kappa, t, nl,
                   extractor_sigma(nl, kappa, eps_ext), eps_1bit, 2 * n, d, w)

    @property
    def final_errors(self) -> tuple[float, float]:
        return final_errors(self.eps_p, self.kappa, self.eps_ext)

    def to_dict(self) -> dict:
        return asdict(self)
