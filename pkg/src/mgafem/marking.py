"""Doerfler marking, combined primal/dual marks, and the cardinality cap.

Mark sets are sorted integer arrays of element indices. All tie-breaks are
by ascending element index, so every operation here is deterministic and
invariant under positive rescaling of the squared indicators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

REGULAR = "regular"
IRREGULAR = "irregular"

CAP_LARGEST = "cap_largest"
EMPTY = "empty"


def _values_of(ind) -> np.ndarray:
    values = getattr(ind, "values", ind)
    return np.asarray(values, dtype=float)


def doerfler_min(ind, theta: float) -> np.ndarray:
    """Smallest set whose squared indicators sum to at least theta * total.

    Sorted descending by value with index tie-break; on the rare float tie
    the set grows until the criterion provably holds under plain summation.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"marking parameter theta must be in (0, 1], got {theta}")
    values = _values_of(ind)
    total = float(np.sum(values))
    if total <= 0.0:
        return np.empty(0, dtype=np.int64)
    order = np.argsort(-values, kind="stable")
    csum = np.cumsum(values[order])
    threshold = theta * total
    count = int(np.searchsorted(csum, threshold, side="left")) + 1
    count = min(count, values.size)
    while values[order[count - 1]] == 0.0 and count > 1:
        count -= 1
    while float(np.sum(values[np.sort(order[:count])])) < threshold and count < values.size:
        count += 1
    return np.sort(order[:count])


def satisfies_doerfler(ind, marked: np.ndarray, theta: float) -> bool:
    values = _values_of(ind)
    return float(np.sum(values[np.sort(np.asarray(marked, dtype=np.int64))])) \
        >= theta * float(np.sum(values))


def combine_marks(m_u: np.ndarray, m_z: np.ndarray, ind_u, ind_z,
                  c_mark: float) -> np.ndarray:
    """Pick the smaller of the two sets and pad it from the other one.

    The padding elements are taken in descending order of the other
    estimator's squared indicators; the combined size never exceeds
    c_mark times the smaller cardinality. Equal sizes prefer the primal set.
    """
    if c_mark < 1.0:
        raise ValueError(f"c_mark must be >= 1, got {c_mark}")
    m_u = np.asarray(m_u, dtype=np.int64)
    m_z = np.asarray(m_z, dtype=np.int64)
    if len(m_u) <= len(m_z):
        m_min, other, ind_other = m_u, m_z, _values_of(ind_z)
    else:
        m_min, other, ind_other = m_z, m_u, _values_of(ind_u)
    cap = int(math.floor(c_mark * len(m_min) + 1e-9))
    extra = np.setdiff1d(other, m_min)
    take = max(cap - len(m_min), 0)
    if take and extra.size:
        ranked = extra[np.argsort(-ind_other[extra], kind="stable")]
        combined = np.union1d(m_min, ranked[:take])
    else:
        combined = m_min.copy()
    assert np.isin(m_min, combined).all()
    assert len(combined) <= c_mark * max(len(m_min), 0) + 1e-9
    assert np.isin(combined, np.union1d(m_u, m_z)).all()
    return combined


@dataclass(frozen=True)
class MarkDecision:
    """Outcome of one marking step: the kind, the set, and the set sizes."""

    kind: str                 # REGULAR or IRREGULAR
    marked: np.ndarray
    n_mark_u: int
    n_mark_z: int
    n_mark_uz: int

    def __post_init__(self):
        if self.kind not in (REGULAR, IRREGULAR):
            raise ValueError(f"unknown marking kind {self.kind!r}")

    @property
    def n_mark(self) -> int:
        return len(self.marked)

    def check_cap(self, prev_mark_count: float) -> None:
        if self.kind == IRREGULAR and not math.isinf(prev_mark_count):
            if self.n_mark > prev_mark_count:
                raise AssertionError(
                    f"irregular marking selected {self.n_mark} elements, more "
                    f"than the previous level's {prev_mark_count}")


@dataclass
class ActiveHistory:
    """Sliding window of the last n_goals - 1 active dual estimator values.

    The buffer starts at zero; prev_mark_count starts at the +inf sentinel
    meaning no cap is available yet.
    """

    n_goals: int
    buffer: list[float] = field(default_factory=list)
    prev_mark_count: float = math.inf

    def __post_init__(self):
        if not self.buffer:
            self.buffer = [0.0] * max(self.n_goals - 1, 0)
        if len(self.buffer) != max(self.n_goals - 1, 0):
            raise ValueError("history buffer must have length n_goals - 1")

    def push(self, zeta_active: float, mark_count: int) -> None:
        if self.buffer:
            self.buffer = [float(zeta_active)] + self.buffer[:-1]
        self.prev_mark_count = mark_count


def decide_marking(zeta_now: float, hist: ActiveHistory, rho_irr: float) -> str:
    """Regular marking iff the active estimator is still comparatively large."""
    largest = max(hist.buffer, default=0.0)
    return REGULAR if rho_irr * largest <= zeta_now else IRREGULAR


def irregular_select(m_uz: np.ndarray, cap: float, variant: str,
                     ind_u, ind_z) -> np.ndarray:
    """Shrink the combined set to at most the previous mark count.

    cap_largest keeps the elements with the largest normalized indicator
    max(u_T / total_u, z_T / total_z); empty drops everything. An infinite
    cap (no previous level) keeps the full set.
    """
    m_uz = np.asarray(m_uz, dtype=np.int64)
    if variant == EMPTY:
        return np.empty(0, dtype=np.int64)
    if variant != CAP_LARGEST:
        raise ValueError(f"unknown irregular marking variant {variant!r}")
    if math.isinf(cap):
        return m_uz.copy()
    keep = min(int(cap), len(m_uz))
    if keep == len(m_uz):
        return m_uz.copy()
    vu = _values_of(ind_u)
    vz = _values_of(ind_z)
    tu = float(np.sum(vu))
    tz = float(np.sum(vz))
    su = vu[m_uz] / tu if tu > 0 else np.zeros(len(m_uz))
    sz = vz[m_uz] / tz if tz > 0 else np.zeros(len(m_uz))
    score = np.maximum(su, sz)
    ranked = m_uz[np.argsort(-score, kind="stable")]
    return np.sort(ranked[:keep])
