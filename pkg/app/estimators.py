"""
Point estimators of the Mann-Whitney effect and the variance estimators built on them.

Single samples go through an exact path: doubled placements are integers, so
theta_hat, tau_hat and the Q-forms are held as Fractions and every estimator is
evaluated in rational arithmetic before a single rounding to float. Replication
batches from the simulation harness go through `batch_statistics`, which runs the
same formulas on float arrays.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from loguru import logger
from scipy.stats import norm

from app.exceptions import InsufficientSampleError, InvalidSampleError
from app.models import (
    ConfidenceInterval,
    CountSums,
    EffectSummary,
    TwoSample,
    VarianceEstimates,
)
from app.ranking import RankTables, rank_arrays, rank_tables


def _require_sizes(n1: int, n2: int, required: int = 2):
    if n1 < required or n2 < required:
        raise InsufficientSampleError(n1, n2, required)


# Variance formulas. Each takes theta, tau, Q1^2, Q2^2 as Fractions, floats or
# arrays and only divides by integers, so the result keeps the input's type.

def _kernel(theta, tau):
    return theta * (1 - theta) - tau / 4


def unbiased_formula(theta, tau, q1_sq, q2_sq, n1: int, n2: int):
    return ((q1_sq + q2_sq) / (n1 * n2) - _kernel(theta, tau)) / ((n1 - 1) * (n2 - 1))


def shs_formula(theta, tau, q1_sq, q2_sq, n1: int, n2: int):
    d_N = n1 * (n1 - 1) * n2 * (n2 - 1)
    return (q1_sq + q2_sq - n1 * n2 * theta * (1 - theta)) / d_N


def delong_formula(theta, tau, q1_sq, q2_sq, n1: int, n2: int):
    d_N = n1 * (n1 - 1) * n2 * (n2 - 1)
    return ((n2 - 1) * q1_sq / n2 + (n1 - 1) * q2_sq / n1) / d_N


def perme_manevski_formula(theta, tau, q1_sq, q2_sq, n1: int, n2: int):
    d_N = n1 * (n1 - 1) * n2 * (n2 - 1)
    return (
        (n2 - 1) ** 2 * q1_sq / n2 ** 2
        + (n1 - 1) ** 2 * q2_sq / n1 ** 2
        + (n1 - 1) * (n2 - 1) * theta * (1 - theta)
    ) / d_N


def hanley_mcneil_formula(theta, tau, q1_sq, q2_sq, n1: int, n2: int):
    """Var_exp: variance of theta_hat when both groups are exponential"""
    return theta * (1 - theta) / (n1 * n2) * (
        1 + (n2 - 1) * (1 - theta) / (2 - theta) + (n1 - 1) * theta / (1 + theta)
    )


FORMULAS = {
    "N": unbiased_formula,
    "SHS": shs_formula,
    "DL": delong_formula,
    "PM": perme_manevski_formula,
    "HM": hanley_mcneil_formula,
}


# Exact path

@dataclass(frozen=True)
class ExactStatistics:
    """Sufficient statistics of one sample in rational arithmetic"""
    n1: int
    n2: int
    theta: Fraction
    tau: Fraction
    q1_sq: Fraction
    q2_sq: Fraction
    placement_sq_sum1: Fraction  # sum of (n2 - R*_1k)^2
    placement_sq_sum2: Fraction  # sum of R*_2l^2

    def estimate(self, estimator_id: str) -> Fraction:
        if estimator_id == "THETA":
            return self.theta
        if estimator_id != "HM":
            _require_sizes(self.n1, self.n2)
        return FORMULAS[estimator_id](self.theta, self.tau, self.q1_sq, self.q2_sq, self.n1, self.n2)


def _doubled(values: np.ndarray) -> list[int]:
    # rank differences are multiples of 1/2, exactly representable
    return [int(v) for v in np.rint(2 * values)]


def _q_form(doubled: list[int]) -> Fraction:
    n = len(doubled)
    total = sum(doubled)
    return Fraction(n * sum(p * p for p in doubled) - total * total, 4 * n)


def exact_statistics(sample: TwoSample, tables: RankTables | None = None) -> ExactStatistics:
    tables = tables if tables is not None else rank_tables(sample)
    n1, n2 = sample.n1, sample.n2
    p1 = _doubled(tables.first.placement)
    p2 = _doubled(tables.second.placement)
    tied_pairs = int(np.rint(tables.first.cross_ties.sum()))

    pairs = n1 * n2
    return ExactStatistics(
        n1=n1,
        n2=n2,
        theta=Fraction(sum(p2), 2 * pairs),
        tau=Fraction(tied_pairs, pairs),
        q1_sq=_q_form(p1),
        q2_sq=_q_form(p2),
        placement_sq_sum1=Fraction(sum((2 * n2 - p) ** 2 for p in p1), 4),
        placement_sq_sum2=Fraction(sum(p * p for p in p2), 4),
    )


def theta_hat(sample: TwoSample) -> float:
    """Plug-in estimate of P(X1 < X2) + P(X1 = X2)/2"""
    return float(exact_statistics(sample).theta)


def tau_hat(sample: TwoSample) -> float:
    """Fraction of cross-group pairs that are tied"""
    return float(exact_statistics(sample).tau)


def q_forms(tables: RankTables) -> tuple[float, float]:
    """Sums of squared centered placements per group"""
    p1 = np.asarray(tables.first.placement, dtype=float)
    p2 = np.asarray(tables.second.placement, dtype=float)
    if p1.ndim == 1:
        return float(_q_form(_doubled(p1))), float(_q_form(_doubled(p2)))
    return _batch_q_form(p1), _batch_q_form(p2)


def effect_summary(sample: TwoSample) -> EffectSummary:
    stats = exact_statistics(sample)
    return EffectSummary(
        theta_hat=float(stats.theta),
        tau_hat=float(stats.tau),
        q1_sq=float(stats.q1_sq),
        q2_sq=float(stats.q2_sq),
        n1=stats.n1,
        n2=stats.n2,
    )


def exact_variance_estimates(sample: TwoSample) -> dict[str, Fraction]:
    stats = exact_statistics(sample)
    _require_sizes(stats.n1, stats.n2)
    return {estimator_id: stats.estimate(estimator_id) for estimator_id in FORMULAS}


def sigma_N_sq(sample: TwoSample) -> float:
    """Unbiased variance estimator of theta_hat, valid with ties"""
    return float(exact_statistics(sample).estimate("N"))


def sigma_SHS_sq(sample: TwoSample) -> float:
    """Mid-rank version of the tie-free unbiased estimator; can be negative"""
    return float(exact_statistics(sample).estimate("SHS"))


def sigma_DL_sq(sample: TwoSample) -> float:
    return float(exact_statistics(sample).estimate("DL"))


def sigma_PM_sq(sample: TwoSample) -> float:
    return float(exact_statistics(sample).estimate("PM"))


def sigma_HM_sq(sample: TwoSample) -> float:
    return float(exact_statistics(sample).estimate("HM"))


def variance_estimates(sample: TwoSample) -> VarianceEstimates:
    exact = exact_variance_estimates(sample)
    return VarianceEstimates(
        sigma_N_sq=float(exact["N"]),
        sigma_SHS_sq=float(exact["SHS"]),
        sigma_DL_sq=float(exact["DL"]),
        sigma_PM_sq=float(exact["PM"]),
        sigma_HM_sq=float(exact["HM"]),
    )


def exact_upper_bound(stats: ExactStatistics) -> Fraction:
    m = min(stats.n1, stats.n2)
    if m < 2:
        raise InsufficientSampleError(stats.n1, stats.n2)
    return stats.theta * (1 - stats.theta) / (m - 1)


def upper_bound(sample: TwoSample) -> float:
    """Sharp bound theta_hat(1 - theta_hat)/(m - 1) on the unbiased estimator"""
    return float(exact_upper_bound(exact_statistics(sample)))


# Count sums

@dataclass(frozen=True)
class ExactCountSums:
    A: Fraction
    B: Fraction
    C: Fraction
    D: Fraction
    E: Fraction
    F: Fraction
    d_N: int

    @property
    def S(self) -> Fraction:
        return self.A + self.B + self.C + self.D


def _count_sums_from(theta, tau, sq_sum1, sq_sum2, n1: int, n2: int):
    pairs = n1 * n2
    E = pairs * theta
    F = pairs * tau
    A = E - F / 4
    B = sq_sum2 - A
    C = sq_sum1 - A
    D = E * E - A - B - C
    return A, B, C, D, E, F


def exact_count_sums(sample: TwoSample) -> ExactCountSums:
    stats = exact_statistics(sample)
    _require_sizes(stats.n1, stats.n2)
    A, B, C, D, E, F = _count_sums_from(
        stats.theta, stats.tau, stats.placement_sq_sum1, stats.placement_sq_sum2, stats.n1, stats.n2
    )
    d_N = stats.n1 * (stats.n1 - 1) * stats.n2 * (stats.n2 - 1)
    return ExactCountSums(A=A, B=B, C=C, D=D, E=E, F=F, d_N=d_N)


def count_sums(sample: TwoSample) -> CountSums:
    """Sums of squares and cross products of the count function, from placements"""
    exact = exact_count_sums(sample)
    return CountSums(
        A=float(exact.A),
        B=float(exact.B),
        C=float(exact.C),
        D=float(exact.D),
        E=float(exact.E),
        F=float(exact.F),
        d_N=exact.d_N,
    )


def wald_ci(theta: float, sigma_sq: float, level: float) -> ConfidenceInterval:
    """Normal-approximation interval for theta, clipped to [0, 1]"""
    if not 0.0 < level < 1.0:
        raise InvalidSampleError(f"confidence level must lie in (0, 1), got {level}")
    if sigma_sq < 0:
        raise InvalidSampleError(f"variance must be non-negative, got {sigma_sq}")

    z = float(norm.ppf(1 - (1 - level) / 2))
    half_width = z * float(np.sqrt(sigma_sq))
    lower = max(0.0, theta - half_width)
    upper = min(1.0, theta + half_width)
    if lower == upper:
        logger.debug(f"Degenerate interval at theta={theta}")
    return ConfidenceInterval(lower=lower, upper=upper, level=level)


# Batch path

def _batch_q_form(placements: np.ndarray) -> np.ndarray:
    centered = placements - placements.mean(axis=-1, keepdims=True)
    return (centered * centered).sum(axis=-1)


@dataclass(frozen=True)
class BatchStatistics:
    """theta_hat, tau_hat and Q-forms for a batch of replications (one per row)"""
    n1: int
    n2: int
    theta: np.ndarray
    tau: np.ndarray
    q1_sq: np.ndarray
    q2_sq: np.ndarray
    placement_sq_sum1: np.ndarray
    placement_sq_sum2: np.ndarray
    tables: RankTables

    def estimate(self, estimator_id: str) -> np.ndarray:
        if estimator_id == "THETA":
            return self.theta
        return FORMULAS[estimator_id](self.theta, self.tau, self.q1_sq, self.q2_sq, self.n1, self.n2)

    def estimates(self, estimator_ids: Sequence[str]) -> dict[str, np.ndarray]:
        return {estimator_id: self.estimate(estimator_id) for estimator_id in estimator_ids}

    def upper_bound(self) -> np.ndarray:
        return self.theta * (1 - self.theta) / (min(self.n1, self.n2) - 1)

    def count_sums(self) -> dict[str, np.ndarray]:
        A, B, C, D, E, F = _count_sums_from(
            self.theta, self.tau, self.placement_sq_sum1, self.placement_sq_sum2, self.n1, self.n2
        )
        return {"A": A, "B": B, "C": C, "D": D, "E": E, "F": F}


def batch_statistics(x1, x2) -> BatchStatistics:
    """Statistics for arrays of shape (replications, n1) and (replications, n2)"""
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    n1, n2 = x1.shape[-1], x2.shape[-1]
    _require_sizes(n1, n2)
    if not (np.isfinite(x1).all() and np.isfinite(x2).all()):
        raise InvalidSampleError("batch contains non-finite values")

    tables = rank_arrays(x1, x2)
    p1 = tables.first.placement
    p2 = tables.second.placement
    pairs = n1 * n2
    return BatchStatistics(
        n1=n1,
        n2=n2,
        theta=p2.sum(axis=-1) / pairs,
        tau=tables.first.cross_ties.sum(axis=-1) / pairs,
        q1_sq=_batch_q_form(p1),
        q2_sq=_batch_q_form(p2),
        placement_sq_sum1=((n2 - p1) ** 2).sum(axis=-1),
        placement_sq_sum2=(p2 ** 2).sum(axis=-1),
        tables=tables,
    )
