"""Domain types for the two-station, two-setting, two-outcome Bell scenario.

Every 16-cell quantity is stored as a 4x4 float array. Rows are the setting
pairs xy in the order 00, 01, 10, 11 and columns are the outcome pairs ab in
the order ++, +0, 0+, 00. The outcome symbol '+' is encoded as bit 1 and '0'
as bit 0 wherever a bit is needed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SETTINGS = ((0, 0), (0, 1), (1, 0), (1, 1))
OUTCOMES = ((1, 1), (1, 0), (0, 1), (0, 0))
ROW_LABELS = ("00", "01", "10", "11")
COL_LABELS = ("++", "+0", "0+", "00")

NORM_TOL = 1e-12
LINEAR_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when a domain object violates one of its invariants."""


def symbol_to_bit(sym) -> int:
    if sym in ("+", 1, True):
        return 1
    if sym in ("0", 0, False):
        return 0
    raise ValidationError(f"invalid outcome symbol {sym!r}")


def bit_to_symbol(bit: int) -> str:
    return "+" if bit else "0"


def row_index(x: int, y: int) -> int:
    return 2 * x + y


def col_index(a: int, b: int) -> int:
    return 2 * (1 - a) + (1 - b)


def cell_of_code(code):
    """Map a packed trial code (x<<3|y<<2|a<<1|b) to a flat cell index."""
    return 4 * (code >> 2) + 3 - (code & 3)


def code_of_cell(cell):
    return ((cell // 4) << 2) | (3 - cell % 4)


# Flat cell index -> packed trial code and back, as lookup tables.
CELL_TO_CODE = np.array([code_of_cell(c) for c in range(16)], dtype=np.uint8)
CODE_TO_CELL = np.array([cell_of_code(c) for c in range(16)], dtype=np.intp)


@dataclass(frozen=True)
class TrialRecord:
    x: int
    y: int
    a: str
    b: str

    def __post_init__(self):
        for name in ("x", "y"):
            if getattr(self, name) not in (0, 1):
                raise ValidationError(f"setting {name}={getattr(self, name)!r} not in {{0,1}}")
        for name in ("a", "b"):
            object.__setattr__(self, name, bit_to_symbol(symbol_to_bit(getattr(self, name))))

    @property
    def code(self) -> int:
        return (self.x << 3) | (self.y << 2) | (symbol_to_bit(self.a) << 1) | symbol_to_bit(self.b)

    @classmethod
    def from_code(cls, code: int) -> "TrialRecord":
        if not 0 <= code < 16:
            raise ValidationError(f"trial code {code} out of range")
        return cls((code >> 3) & 1, (code >> 2) & 1, bit_to_symbol((code >> 1) & 1), bit_to_symbol(code & 1))


def _as_table(values, dtype=float) -> np.ndarray:
    if isinstance(values, dict):
        arr = np.zeros((4, 4), dtype=dtype)
        for (a, b, x, y), v in values.items():
            arr[row_index(x, y), col_index(symbol_to_bit(a), symbol_to_bit(b))] = v
        if len(values) != 16:
            raise ValidationError("table must define all 16 cells")
        return arr
    arr = np.array(values, dtype=dtype)
    if arr.shape == (16,):
        arr = arr.reshape(4, 4)
    if arr.shape != (4, 4):
        raise ValidationError(f"table must be 4x4, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CountTable:
    counts: np.ndarray

    def __post_init__(self):
        raw = _as_table(self.counts, dtype=float)
        if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
            raise ValidationError("counts must be integers")
        if np.any(raw < 0):
            raise ValidationError("counts must be non-negative")
        arr = raw.astype(np.int64)
        if np.any(arr.sum(axis=1) == 0):
            empty = [ROW_LABELS[i] for i in np.flatnonzero(arr.sum(axis=1) == 0)]
            raise ValidationError(f"setting pair(s) {empty} have no trials")
        object.__setattr__(self, "counts", _frozen(arr))

    @property
    def setting_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        """Empirical conditional frequencies f(ab|xy)."""
        return self.counts / self.setting_totals[:, None]

    @classmethod
    def from_codes(cls, codes: np.ndarray) -> "CountTable":
        codes = np.asarray(codes, dtype=np.uint8)
        tally = np.bincount(codes, minlength=16)[:16]
        return cls(tally[CELL_TO_CODE].reshape(4, 4))


def signaling_residual(cond: np.ndarray) -> float:
    """Largest violation of the non-signaling equalities for P(ab|xy)."""
    res = 0.0
    for x in (0, 1):
        # Alice's marginal P(a=+|x,y) must not depend on y.
        res = max(res, abs(cond[2 * x, :2].sum() - cond[2 * x + 1, :2].sum()))
    for y in (0, 1):
        res = max(res, abs(cond[y, [0, 2]].sum() - cond[2 + y, [0, 2]].sum()))
    return float(res)


@dataclass(frozen=True)
class JointDistribution:
    """Joint probabilities p(a,b,x,y) on the 16-cell result space."""

    p: np.ndarray
    uniform_settings: bool = True
    non_signaling: bool = True

    def __post_init__(self):
        arr = _as_table(self.p)
        if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
            raise ValidationError("probabilities must lie in [0, 1]")
        total = math.fsum(arr.ravel())
        if abs(total - 1.0) > NORM_TOL:
            raise ValidationError(f"normalization: probabilities sum to {total!r}")
        rows = arr.sum(axis=1)
        if self.uniform_settings and np.max(np.abs(rows - 0.25)) > LINEAR_TOL:
            raise ValidationError("settings marginals: p(xy) must be 1/4 for each setting pair")
        if self.non_signaling:
            if np.any(rows <= 0):
                raise ValidationError("non-signaling: a setting pair has zero probability")
            r = signaling_residual(arr / rows[:, None])
            if r > LINEAR_TOL:
                raise ValidationError(f"non-signaling: equalities violated by {r:.3e}")
        object.__setattr__(self, "p", _frozen(arr))

    def conditional(self) -> np.ndarray:
        return self.p / self.p.sum(axis=1)[:, None]

    def settings(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @classmethod
    def from_conditional(cls, cond, settings: Sequence[float] = (0.25,) * 4, **flags) -> "JointDistribution":
        cond = _as_table(cond)
        s = np.asarray(settings, dtype=float)
        return cls(cond * s[:, None], **flags)


def expectation(values: np.ndarray, dist: np.ndarray) -> float:
    """E(T) = sum over cells of T * p, with exact-rounding summation."""
    return math.fsum((np.asarray(values) * np.asarray(dist)).ravel())


@dataclass(frozen=True)
class BellFunction:
    """Positive Bell function T with its non-signaling excess m and bias alpha."""

    t_values: np.ndarray
    m: float
    alpha: float = 0.0

    def __post_init__(self):
        arr = _as_table(self.t_values)
        if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
            raise ValidationError("Bell function values must be strictly positive")
        if not 0 <= self.alpha < 0.25:
            raise ValidationError(f"alpha={self.alpha} outside [0, 1/4)")
        if not math.isfinite(self.m) or self.m < 0:
            raise ValidationError(f"m={self.m} must be a non-negative finite number")
        object.__setattr__(self, "t_values", _frozen(arr))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def log_values(self) -> np.ndarray:
        return np.log(self.t_values)

    def check(self, tol: float = 1e-12) -> None:
        """Verify the LR and non-signaling conditions over all extreme points."""
        from bellrand.pbr import extremal_settings

        for s in extremal_settings(self.alpha):
            for lam in LR_CONDITIONALS:
                e = expectation(self.t_values, lam * s.q[:, None])
                if e > 1 + tol:
                    raise ValidationError(f"LR condition violated: E(T)={e!r}")
            for box in PR_CONDITIONALS:
                e = expectation(self.t_values, box * s.q[:, None])
                if e > 1 + self.m + tol:
                    raise ValidationError(f"non-signaling bound violated: E(T)={e!r} > 1+m")


def _lr_conditional(a0, a1, b0, b1) -> np.ndarray:
    cond = np.zeros((4, 4))
    for x, y in SETTINGS:
        a = (a0, a1)[x]
        b = (b0, b1)[y]
        cond[row_index(x, y), col_index(a, b)] = 1.0
    return cond


def _pr_conditional(mu: int, nu: int, gamma: int) -> np.ndarray:
    # a XOR b = x*y XOR mu*x XOR nu*y XOR gamma, with probability 1/2 on each
    # of the two outcome pairs satisfying the relation. With '+'=1, mu=nu=gamma=0
    # gives equal outcomes unless xy=11.
    cond = np.zeros((4, 4))
    for x, y in SETTINGS:
        parity = (x & y) ^ (mu & x) ^ (nu & y) ^ gamma
        for a, b in OUTCOMES:
            if a ^ b == parity:
                cond[row_index(x, y), col_index(a, b)] = 0.5
    return cond


LR_LABELS = tuple(itertools.product((0, 1), repeat=4))
LR_CONDITIONALS = tuple(_frozen(_lr_conditional(*lam)) for lam in LR_LABELS)
PR_LABELS = tuple(itertools.product((0, 1), repeat=3))
PR_CONDITIONALS = tuple(_frozen(_pr_conditional(*k)) for k in PR_LABELS)


def deterministic_lr_points() -> list[JointDistribution]:
    """The 16 deterministic local strategies lambda=(a0,a1,b0,b1), uniform settings."""
    return [JointDistribution.from_conditional(c) for c in LR_CONDITIONALS]


def pr_boxes() -> list[JointDistribution]:
    """The canonical PR box followed by its 7 relabelings, uniform settings."""
    return [JointDistribution.from_conditional(c) for c in PR_CONDITIONALS]


def extreme_conditionals() -> tuple[np.ndarray, ...]:
    return LR_CONDITIONALS + PR_CONDITIONALS


def chsh_indicator(mu: int = 0, nu: int = 0, gamma: int = 0) -> np.ndarray:
    """Indicator of the cells satisfying the CHSH relation of one PR orientation."""
    return (_pr_conditional(mu, nu, gamma) > 0).astype(float)


def codes_from_records(records: Iterable[TrialRecord]) -> np.ndarray:
    return np.fromiter((r.code for r in records), dtype=np.uint8)


def records_from_codes(codes: Iterable[int]) -> list[TrialRecord]:
    return [TrialRecord.from_code(int(c)) for c in codes]
