"""
Exact expectations of the estimators under a finite distribution pair.

Every estimator is symmetric within a group, so outcomes are enumerated as
multisets weighted by their multinomial probability instead of as ordered tuples.
All sums are rational and therefore independent of summation order.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from math import factorial, prod
from typing import Iterator, Optional, Sequence

from loguru import logger

from app.config import settings
from app.estimators import FORMULAS, exact_statistics, exact_upper_bound
from app.exceptions import BudgetExceededError, ConfigError, InsufficientSampleError
from app.models import TwoSample
from app.oracle.brute import brute_estimators
from app.oracle.fixtures import FiniteDistPair


@dataclass(frozen=True)
class ExactExpectation:
    n1: int
    n2: int
    expected_sigma_N_sq: Fraction
    sigma_N_sq_true: Fraction
    outcomes: int = 0

    @property
    def unbiased(self) -> bool:
        return self.expected_sigma_N_sq == self.sigma_N_sq_true


@dataclass(frozen=True)
class BoundSearchResult:
    n1: int
    n2: int
    grid: tuple[float, ...]
    best_sample: Optional[TwoSample]
    best_ratio: Fraction
    samples_checked: int
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations and self.best_ratio <= 1


def _check_sizes(n1: int, n2: int):
    if n1 < 2 or n2 < 2:
        raise InsufficientSampleError(n1, n2)


def _check_budget(dist: FiniteDistPair, n1: int, n2: int, budget: Optional[int]):
    budget = settings.enumeration_budget if budget is None else budget
    outcomes = dist.outcome_count(n1, n2)
    if outcomes > budget:
        raise BudgetExceededError(outcomes, budget)


def group_outcomes(support: Sequence, probs: Sequence[Fraction], n: int) -> Iterator[tuple[tuple, Fraction]]:
    """Multisets of size n over the support with their exact probability"""
    for combo in combinations_with_replacement(range(len(support)), n):
        counts = [combo.count(i) for i in range(len(support))]
        weight = Fraction(factorial(n), prod(factorial(c) for c in counts))
        weight *= prod((p ** c for p, c in zip(probs, counts)), start=Fraction(1))
        yield tuple(support[i] for i in combo), weight


def outcomes(dist: FiniteDistPair, n1: int, n2: int) -> Iterator[tuple[TwoSample, Fraction]]:
    firsts = list(group_outcomes(dist.support1, dist.probs1, n1))
    seconds = list(group_outcomes(dist.support2, dist.probs2, n2))
    for (g1, w1), (g2, w2) in product(firsts, seconds):
        yield TwoSample.of(g1, g2), w1 * w2


def exact_expectations(
    dist: FiniteDistPair,
    n1: int,
    n2: int,
    estimator_ids: Sequence[str] = ("N", "SHS", "DL", "PM", "HM", "THETA"),
    budget: Optional[int] = None,
) -> tuple[dict[str, Fraction], int]:
    """E[estimator] for each id, and the number of multiset outcomes visited"""
    _check_sizes(n1, n2)
    _check_budget(dist, n1, n2, budget)
    unknown = set(estimator_ids) - set(FORMULAS) - {"THETA"}
    if unknown:
        raise ConfigError(f"unknown estimator(s): {', '.join(sorted(unknown))}")

    totals = {estimator_id: Fraction(0) for estimator_id in estimator_ids}
    mass = Fraction(0)
    visited = 0
    for sample, weight in outcomes(dist, n1, n2):
        stats = exact_statistics(sample)
        for estimator_id in estimator_ids:
            totals[estimator_id] += weight * stats.estimate(estimator_id)
        mass += weight
        visited += 1

    if mass != 1:
        raise AssertionError(f"{dist.name}: enumerated probability mass is {mass}")
    logger.debug(f"{dist.name} n1={n1} n2={n2}: {visited} weighted outcomes")
    return totals, visited


def exact_unbiasedness(dist: FiniteDistPair, n1: int, n2: int, budget: Optional[int] = None) -> ExactExpectation:
    totals, visited = exact_expectations(dist, n1, n2, ("N",), budget)
    return ExactExpectation(
        n1=n1,
        n2=n2,
        expected_sigma_N_sq=totals["N"],
        sigma_N_sq_true=dist.ground_truth().sigma_N_sq(n1, n2),
        outcomes=visited,
    )


def exact_bias(dist: FiniteDistPair, n1: int, n2: int, estimator_id: str, budget: Optional[int] = None) -> Fraction:
    """E[estimator] - sigma_N^2, exactly"""
    totals, _ = exact_expectations(dist, n1, n2, (estimator_id,), budget)
    return totals[estimator_id] - dist.ground_truth().sigma_N_sq(n1, n2)


def count_sum_violations(dist: FiniteDistPair, n1: int, n2: int, budget: Optional[int] = None) -> list[str]:
    """Check A + B + C + D = E^2 and A = E - F/4 in rational arithmetic on every outcome"""
    _check_sizes(n1, n2)
    _check_budget(dist, n1, n2, budget)
    failures = []
    for sample, _ in outcomes(dist, n1, n2):
        sums = brute_estimators(sample, exact=True).count_sums
        if sums["A"] + sums["B"] + sums["C"] + sums["D"] != sums["E"] ** 2:
            failures.append(f"A + B + C + D != E^2 on {sample.group1} vs {sample.group2}")
        if sums["A"] != sums["E"] - sums["F"] / 4:
            failures.append(f"A != E - F/4 on {sample.group1} vs {sample.group2}")
    return failures


def bound_search(n1: int, n2: int, grid: Sequence[float], budget: Optional[int] = None) -> BoundSearchResult:
    """
    Exhaustive search over samples drawn from `grid` for the largest
    sigma_N^2 / (theta_hat(1 - theta_hat)/(m - 1)). Samples with theta_hat in
    {0, 1} have ratio 0.
    """
    _check_sizes(n1, n2)
    grid = tuple(sorted(set(float(v) for v in grid)))
    budget = settings.enumeration_budget if budget is None else budget
    samples = len(grid) ** (n1 + n2)
    if samples > budget:
        raise BudgetExceededError(samples, budget)

    best_sample = None
    best_ratio = Fraction(-1)
    checked = 0
    violations = []
    for g1 in combinations_with_replacement(grid, n1):
        for g2 in combinations_with_replacement(grid, n2):
            sample = TwoSample.of(g1, g2)
            stats = exact_statistics(sample)
            sigma = stats.estimate("N")
            bound = exact_upper_bound(stats)
            checked += 1

            if sigma < 0:
                violations.append(f"negative estimate {sigma} on {g1} vs {g2}")
            if bound == 0:
                ratio = Fraction(0)
                if sigma != 0:
                    violations.append(f"estimate {sigma} with theta_hat at the boundary on {g1} vs {g2}")
            else:
                ratio = sigma / bound
            if ratio > 1:
                violations.append(f"ratio {ratio} above 1 on {g1} vs {g2}")
            if ratio > best_ratio:
                best_ratio, best_sample = ratio, sample

    return BoundSearchResult(
        n1=n1,
        n2=n2,
        grid=grid,
        best_sample=best_sample,
        best_ratio=max(best_ratio, Fraction(0)),
        samples_checked=checked,
        violations=violations,
    )
