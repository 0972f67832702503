"""
Randomized sweep over the algebraic identities of the variance estimators.
"""
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel

from app.config import settings
from app.estimators import batch_statistics, exact_statistics
from app.models import DEFAULT_BLOCK_SIZE, TwoSample
from app.oracle.brute import brute_estimators
from app.ranking import rank_invariant_violations
from app.simulation.streams import block_rng, block_sizes

SAMPLE_KINDS = ("continuous", "tied", "ordinal")
BRUTE_MAX_SIZE = 8
SWEEP_CELL = 0
BRUTE_CELL = 1


class IdentityReport(BaseModel):
    samples: int
    brute_samples: int
    failures: dict[str, int] = {}
    max_identity_error: float = 0.0
    max_brute_error: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures


def draw_batch(
    rng: np.random.Generator,
    size: int,
    n_min: int = 2,
    n_max: int = 30,
    kinds: Sequence[str] = SAMPLE_KINDS,
):
    """One batch of same-shaped samples of a kind drawn from `kinds`"""
    kind = kinds[rng.integers(len(kinds))]
    n1, n2 = (int(n) for n in rng.integers(n_min, n_max + 1, size=2))
    if kind == "continuous":
        x1 = rng.normal(size=(size, n1))
        x2 = rng.normal(rng.normal(), 1.0, size=(size, n2))
    elif kind == "tied":
        levels = int(rng.integers(1, 4))
        x1 = rng.integers(0, levels + 1, size=(size, n1)).astype(float)
        x2 = rng.integers(0, levels + 1, size=(size, n2)).astype(float)
    else:
        x1 = rng.integers(1, 6, size=(size, n1)).astype(float)
        x2 = np.minimum(rng.integers(1, 6, size=(size, n2)) + rng.integers(0, 2), 5).astype(float)
    return kind, x1, x2


def _tally(failures: dict[str, int], name: str, mask: np.ndarray):
    hits = int(np.count_nonzero(mask))
    if hits:
        failures[name] = failures.get(name, 0) + hits


def _check_batch(x1, x2, tol: float, failures: dict[str, int]) -> float:
    stats = batch_statistics(x1, x2)
    n1, n2 = stats.n1, stats.n2
    m = min(n1, n2)
    d_N = n1 * (n1 - 1) * n2 * (n2 - 1)

    sigma = stats.estimate("N")
    shs = stats.estimate("SHS")
    sums = stats.count_sums()

    _tally(failures, "negative estimate", sigma < -tol)
    _tally(failures, "above theta_hat(1 - theta_hat)/(m - 1)", sigma > stats.upper_bound() + tol)
    _tally(failures, "above 1/(4(m - 1))", sigma > 1 / (4 * (m - 1)) + tol)
    _tally(failures, "boundary theta_hat with non-zero estimate",
           ((stats.theta == 0) | (stats.theta == 1)) & (np.abs(sigma) > tol))
    _tally(failures, "SHS differs from unbiased estimator without ties",
           (stats.tau == 0) & (np.abs(shs - sigma) > tol))
    for name in ("A", "B", "C", "D"):
        _tally(failures, f"negative count sum {name}", sums[name] < -tol * max(1, n1 * n2) ** 2)

    via_d = stats.theta ** 2 - sums["D"] / d_N
    via_abc = (sums["A"] + sums["B"] + sums["C"]
               - (n1 + n2 - 1) / ((n1 - 1) * (n2 - 1)) * sums["D"]) / (n1 * n2) ** 2
    error = np.maximum(np.abs(sigma - via_d), np.abs(sigma - via_abc))
    _tally(failures, "count-sum identity", error > tol)

    for message in rank_invariant_violations(stats.tables):
        failures[f"rank tables: {message}"] = failures.get(f"rank tables: {message}", 0) + 1
    return float(error.max(initial=0.0))


def _brute_check(rng: np.random.Generator, count: int, tol: float, failures: dict[str, int]) -> float:
    worst = 0.0
    for _ in range(count):
        _, x1, x2 = draw_batch(rng, 1, n_max=BRUTE_MAX_SIZE)
        sample = TwoSample.of(x1[0], x2[0])
        stats = exact_statistics(sample)
        brute = brute_estimators(sample).as_floats()
        batch = batch_statistics(x1, x2)

        reference = {"theta": stats.theta, "tau": stats.tau, "q1_sq": stats.q1_sq, "q2_sq": stats.q2_sq}
        reference.update({k: stats.estimate(k) for k in ("N", "SHS", "DL", "PM", "HM")})
        for key, value in reference.items():
            err = abs(float(value) - brute[key])
            worst = max(worst, err)
            if err > tol:
                failures[f"brute force disagrees on {key}"] = failures.get(f"brute force disagrees on {key}", 0) + 1
        for key in ("N", "SHS", "DL", "PM", "HM"):
            err = abs(float(stats.estimate(key)) - float(batch.estimate(key)[0]))
            if err > tol:
                failures[f"batch path disagrees on {key}"] = failures.get(f"batch path disagrees on {key}", 0) + 1
    return worst


def identity_sweep(
    nsim: int,
    seed: int,
    brute_samples: int = 1000,
    tolerance: Optional[float] = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> IdentityReport:
    """
    Draw `nsim` random samples (continuous, heavily tied and ordinal; group sizes
    2..30) and check bounds, the count-sum identities and the rank-table
    invariants on each. The first `brute_samples` small samples are also compared
    against the loop-based reference.
    """
    tol = settings.bound_tolerance if tolerance is None else tolerance
    failures: dict[str, int] = {}
    max_error = 0.0

    for index, size in enumerate(block_sizes(nsim, block_size)):
        _, x1, x2 = draw_batch(block_rng(seed, SWEEP_CELL, index), size)
        max_error = max(max_error, _check_batch(x1, x2, tol, failures))
        logger.debug(f"identity sweep block {index}: {size} samples")

    brute_count = min(brute_samples, nsim)
    max_brute = _brute_check(block_rng(seed, BRUTE_CELL, 0), brute_count, tol, failures)

    report = IdentityReport(
        samples=nsim,
        brute_samples=brute_count,
        failures=failures,
        max_identity_error=max_error,
        max_brute_error=max_brute,
    )
    logger.info(f"Identity sweep: {nsim} samples, {len(failures)} failing checks")
    return report
