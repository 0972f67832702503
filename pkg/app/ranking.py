"""
Counting statistics, ranks and placements.

Every function here works on exact value equality: two observations tie only if
their floats compare equal. Array functions rank along the last axis, so the same
code serves a single sample (1-D groups) and a batch of replications (2-D groups,
one replication per row).
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.stats import rankdata

from app.exceptions import InvalidSampleError
from app.models import TwoSample


def _require_finite(x: float, y: float):
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidSampleError(f"count function needs finite values, got ({x}, {y})")


def count(x: float, y: float) -> float:
    """0 if x > y, 1/2 if x == y, 1 if x < y"""
    _require_finite(x, y)
    if x < y:
        return 1.0
    if x == y:
        return 0.5
    return 0.0


def count_plus(x: float, y: float) -> int:
    """Right-continuous version: 1 iff x <= y"""
    _require_finite(x, y)
    return int(x <= y)


def count_minus(x: float, y: float) -> int:
    """Left-continuous version: 1 iff x < y"""
    _require_finite(x, y)
    return int(x < y)


def midranks(values) -> np.ndarray:
    """Mid-ranks of a single pooled sample"""
    return rankdata(np.asarray(values, dtype=float), method="average", axis=-1)


def normalized_edf(sample, points) -> np.ndarray:
    """Normalized empirical distribution function of `sample` evaluated at `points`"""
    sample = np.asarray(sample, dtype=float)[:, None]
    points = np.asarray(points, dtype=float)[None, :]
    return ((sample < points) + 0.5 * (sample == points)).mean(axis=0)


@dataclass(frozen=True)
class GroupRanks:
    """Rankings of one group; arrays have the group size on their last axis"""
    overall_mid: np.ndarray
    overall_min: np.ndarray
    overall_max: np.ndarray
    internal_mid: np.ndarray
    internal_min: np.ndarray
    internal_max: np.ndarray
    placement: np.ndarray

    @property
    def cross_ties(self) -> np.ndarray:
        """Per observation: number of tied values in the other group"""
        return (self.overall_max - self.overall_min) - (self.internal_max - self.internal_min)


@dataclass(frozen=True)
class RankTables:
    first: GroupRanks
    second: GroupRanks

    @property
    def n1(self) -> int:
        return self.first.placement.shape[-1]

    @property
    def n2(self) -> int:
        return self.second.placement.shape[-1]


def _group_ranks(mid, low, high, values) -> GroupRanks:
    internal_mid = rankdata(values, method="average", axis=-1)
    return GroupRanks(
        overall_mid=mid,
        overall_min=low,
        overall_max=high,
        internal_mid=internal_mid,
        internal_min=rankdata(values, method="min", axis=-1),
        internal_max=rankdata(values, method="max", axis=-1),
        placement=mid - internal_mid,
    )


def rank_arrays(x1, x2) -> RankTables:
    """Rank tables for groups given as arrays; a leading axis indexes replications"""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    n1 = x1.shape[-1]
    pooled = np.concatenate([x1, x2], axis=-1)

    # one pooled pass so ties across the group boundary share a tie run
    mid = rankdata(pooled, method="average", axis=-1)
    low = rankdata(pooled, method="min", axis=-1)
    high = rankdata(pooled, method="max", axis=-1)

    return RankTables(
        first=_group_ranks(mid[..., :n1], low[..., :n1], high[..., :n1], x1),
        second=_group_ranks(mid[..., n1:], low[..., n1:], high[..., n1:], x2),
    )


def rank_tables(sample: TwoSample) -> RankTables:
    """Overall, internal, min/max ranks and placements of a two-sample"""
    return rank_arrays(sample.group1, sample.group2)


def rank_invariant_violations(tables: RankTables, tolerance: float = 1e-9) -> list[str]:
    """Names of the rank-table invariants that fail (on any replication)"""
    n1, n2 = tables.n1, tables.n2
    N = n1 + n2
    failures = []

    for label, group in (("group1", tables.first), ("group2", tables.second)):
        if np.any(np.abs(group.overall_mid - (group.overall_min + group.overall_max) / 2) > tolerance):
            failures.append(f"{label}: mid rank differs from (min + max) / 2")
    if np.any(tables.first.placement < -tolerance) or np.any(tables.first.placement > n2 + tolerance):
        failures.append("group1: placement outside [0, n2]")
    if np.any(tables.second.placement < -tolerance) or np.any(tables.second.placement > n1 + tolerance):
        failures.append("group2: placement outside [0, n1]")

    placement_total = tables.first.placement.sum(axis=-1) + tables.second.placement.sum(axis=-1)
    if np.any(np.abs(placement_total - n1 * n2) > tolerance):
        failures.append("placements do not sum to n1 * n2")

    rank_total = tables.first.overall_mid.sum(axis=-1) + tables.second.overall_mid.sum(axis=-1)
    if np.any(np.abs(rank_total - N * (N + 1) / 2) > tolerance):
        failures.append("overall mid-ranks do not sum to N(N + 1) / 2")
    return failures
