"""
Monte-Carlo harness for the bias, q-MSE and L2-consistency experiments.

Replications are split into blocks of the config's `block_size`. Each block draws from its own
stream keyed by (seed, cell id, block index), and block results are reduced in
index order, so a run is bit-identical for any worker count.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence
import math

import numpy as np
import pandas as pd
from loguru import logger

from app.analytic.distributions import DistributionSpec, spec_from_config
from app.analytic.ground_truth import GroundTruth
from app.config import settings
from app.estimators import batch_statistics
from app.exceptions import ConfigError, InvariantViolationError, MannWhitneyError
from app.models import (
    DEFAULT_BLOCK_SIZE,
    ConsistencyReport,
    ConsistencyRow,
    ExperimentConfig,
    ExperimentRow,
    SpecConfig,
)
from app.simulation.streams import block_rng, block_sizes

CSV_COLUMNS = ["spec", "theta", "n1", "n2", "estimator", "mean", "bias", "variance", "qmse", "se", "nsim"]
CONSISTENCY_COLUMNS = ["spec", "N", "n1", "n2", "l2_error", "se", "nsim"]
QMSE_THETA_RANGE = (0.5, 0.999)


@dataclass(frozen=True)
class BlockTask:
    spec: DistributionSpec
    n1: int
    n2: int
    estimators: tuple[str, ...]
    targets: dict  # estimator id -> value the deviations are centered on
    seed: int
    cell_id: int
    block_index: int
    size: int
    tolerance: float


@dataclass(frozen=True)
class BlockMoments:
    """Power sums of deviations from the target, per estimator"""
    count: int
    sums: dict  # estimator id -> (sum d, sum d^2, sum d^4)


def assert_bounds(sigma: np.ndarray, upper: np.ndarray, m: int, tolerance: float, where: str):
    """Raise if any unbiased estimate leaves [0, theta_hat(1 - theta_hat)/(m - 1)]"""
    if np.any(sigma < -tolerance):
        raise InvariantViolationError(f"{where}: negative estimate {float(sigma.min())!r}")
    excess = sigma - upper
    if np.any(excess > tolerance):
        raise InvariantViolationError(f"{where}: estimate exceeds theta_hat(1 - theta_hat)/(m - 1) by {float(excess.max())!r}")
    if np.any(sigma > 1 / (4 * (m - 1)) + tolerance):
        raise InvariantViolationError(f"{where}: estimate exceeds 1/(4(m - 1))")


def simulate_block(task: BlockTask) -> BlockMoments:
    rng = block_rng(task.seed, task.cell_id, task.block_index)
    x1, x2 = task.spec.sample(rng, task.n1, task.n2, task.size)
    stats = batch_statistics(x1, x2)
    assert_bounds(
        stats.estimate("N"), stats.upper_bound(), min(task.n1, task.n2), task.tolerance,
        f"cell {task.cell_id} block {task.block_index}",
    )

    sums = {}
    for estimator_id in task.estimators:
        d = stats.estimate(estimator_id) - task.targets[estimator_id]
        d2 = d * d
        sums[estimator_id] = (float(d.sum()), float(d2.sum()), float((d2 * d2).sum()))
    return BlockMoments(count=task.size, sums=sums)


def _run_tasks(worker, tasks: list, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=threads) as executor:
        # map keeps submission order
        return list(executor.map(worker, tasks))


def _reduce(blocks: Sequence[BlockMoments], estimator_id: str) -> tuple[int, float, float, float]:
    n = sum(block.count for block in blocks)
    s1 = s2 = s4 = 0.0
    for block in blocks:
        b1, b2, b4 = block.sums[estimator_id]
        s1 += b1
        s2 += b2
        s4 += b4
    return n, s1, s2, s4


def _standard_error(n: int, mean: float, mean_sq: float) -> float:
    """Standard error of a sample mean from its first two raw moments"""
    if n < 2:
        return 0.0
    variance = max(mean_sq - mean * mean, 0.0) * n / (n - 1)
    return math.sqrt(variance / n)


def _cell_rows(
    label: str,
    truth: GroundTruth,
    n1: int,
    n2: int,
    estimators: Sequence[str],
    blocks: Sequence[BlockMoments],
    metric: str,
) -> list[ExperimentRow]:
    sigma_N = float(truth.sigma_N_sq(n1, n2))
    rows = []
    for estimator_id in estimators:
        target = float(truth.theta) if estimator_id == "THETA" else sigma_N
        n, s1, s2, s4 = _reduce(blocks, estimator_id)
        bias = s1 / n
        mse = s2 / n
        variance = max(mse - bias * bias, 0.0)

        if metric == "qmse":
            se = _standard_error(n, mse, s4 / n) / sigma_N
        elif metric == "ratio":
            se = _standard_error(n, bias, mse) / sigma_N
        else:
            se = _standard_error(n, bias, mse)

        rows.append(ExperimentRow(
            spec=label,
            theta=float(truth.theta),
            n1=n1,
            n2=n2,
            estimator=estimator_id,
            mean=target + bias,
            bias=bias,
            variance=variance,
            qmse=mse / sigma_N,
            se=se,
            nsim=n,
        ))
    return rows


def _resolve_cell(spec_config: SpecConfig) -> tuple[DistributionSpec, GroundTruth]:
    spec = spec_from_config(spec_config)
    try:
        truth = spec.ground_truth()
    except MannWhitneyError:
        raise
    except Exception as e:
        raise ConfigError(f"{spec_config.label}: no ground truth available: {e}") from e
    return spec, truth


def _run_cells(config: ExperimentConfig, metric: str, threads: Optional[int], check=None) -> list[ExperimentRow]:
    threads = settings.resolve_threads(threads)
    estimators = tuple(config.estimators)
    cells = []
    tasks = []
    for cell_id, spec_config in enumerate(config.expand_specs()):
        spec, truth = _resolve_cell(spec_config)
        if check is not None:
            check(spec_config, truth)
        failures = truth.invariant_violations(config.n1, config.n2, tolerance=1e-9)
        if failures:
            raise ConfigError(f"{spec_config.label}: ground truth fails {'; '.join(failures)}")

        sigma_N = float(truth.sigma_N_sq(config.n1, config.n2))
        if sigma_N <= 0:
            raise ConfigError(f"{spec_config.label}: true variance is zero")
        targets = {e: (float(truth.theta) if e == "THETA" else sigma_N) for e in estimators}
        first = len(tasks)
        for block_index, size in enumerate(block_sizes(config.nsim, config.block_size)):
            tasks.append(BlockTask(
                spec=spec, n1=config.n1, n2=config.n2, estimators=estimators, targets=targets,
                seed=config.seed, cell_id=cell_id, block_index=block_index, size=size,
                tolerance=settings.bound_tolerance,
            ))
        cells.append((spec_config.label, truth, first, len(tasks)))

    logger.info(f"Running {config.experiment}: {len(cells)} cells, {len(tasks)} blocks on {threads} worker(s)")
    blocks = _run_tasks(simulate_block, tasks, threads)

    rows = []
    for label, truth, start, stop in cells:
        rows.extend(_cell_rows(label, truth, config.n1, config.n2, estimators, blocks[start:stop], metric))
        logger.debug(f"{label}: done")
    return rows


def run_bias(config: ExperimentConfig, threads: Optional[int] = None) -> list[ExperimentRow]:
    """Mean, bias and variance of each estimator per cell"""
    return _run_cells(config, config.metric, threads)


def _check_qmse_theta(spec_config: SpecConfig, truth: GroundTruth):
    low, high = QMSE_THETA_RANGE
    if not low - 1e-9 <= float(truth.theta) <= high + 1e-9:
        raise ConfigError(f"{spec_config.label}: theta={float(truth.theta):.6g} outside the q-MSE range [{low}, {high}]")


def run_qmse(config: ExperimentConfig, threads: Optional[int] = None) -> list[ExperimentRow]:
    """q-MSE = (variance + bias^2) / sigma_N^2 per estimator per cell"""
    return _run_cells(config, "qmse", threads, check=_check_qmse_theta)


def run_consistency(
    spec_config: SpecConfig,
    n_sequence: Sequence[int],
    nsim: int,
    seed: int,
    threads: Optional[int] = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> ConsistencyReport:
    """
    Estimate E(N sigma_N_hat^2 / s_N^2 - 1)^2 with n1 = n2 = N/2 along n_sequence
    and judge whether it decreases (with 2 standard errors of slack per step).
    """
    threads = settings.resolve_threads(threads)
    spec, truth = _resolve_cell(spec_config)
    if float(truth.sigma1_sq) <= 1e-12 or float(truth.sigma2_sq) <= 1e-12:
        raise ConfigError(f"{spec_config.label}: consistency needs sigma1^2 > 0 and sigma2^2 > 0")

    tasks = []
    spans = []
    for cell_id, N in enumerate(n_sequence):
        if N % 2 or N < 4:
            raise ConfigError(f"consistency sizes must be even and at least 4, got {N}")
        n = N // 2
        first = len(tasks)
        for block_index, size in enumerate(block_sizes(nsim, block_size)):
            tasks.append(BlockTask(
                spec=spec, n1=n, n2=n, estimators=("N",), targets={"N": float(truth.s_N_sq(n, n))},
                seed=seed, cell_id=cell_id, block_index=block_index, size=size,
                tolerance=settings.bound_tolerance,
            ))
        spans.append((N, n, first, len(tasks)))

    logger.info(f"Running consistency for {spec_config.label}: N in {list(n_sequence)}")
    blocks = _run_tasks(consistency_block, tasks, threads)

    rows = []
    for N, n, start, stop in spans:
        total, sum1, sum2, _ = _reduce(blocks[start:stop], "N")
        l2 = sum1 / total
        rows.append(ConsistencyRow(
            spec=spec_config.label, N=N, n1=n, n2=n,
            l2_error=l2, se=_standard_error(total, l2, sum2 / total), nsim=total,
        ))

    monotone = all(
        b.l2_error <= a.l2_error + 2 * math.sqrt(a.se ** 2 + b.se ** 2)
        for a, b in zip(rows, rows[1:])
    )
    return ConsistencyReport(spec=spec_config.label, rows=rows, monotone=monotone)


def consistency_block(task: BlockTask) -> BlockMoments:
    """Power sums of e = (N sigma_N_hat^2 / s_N^2 - 1)^2; targets["N"] holds s_N^2"""
    rng = block_rng(task.seed, task.cell_id, task.block_index)
    x1, x2 = task.spec.sample(rng, task.n1, task.n2, task.size)
    stats = batch_statistics(x1, x2)
    sigma = stats.estimate("N")
    assert_bounds(sigma, stats.upper_bound(), min(task.n1, task.n2), task.tolerance,
                  f"N={task.n1 + task.n2} block {task.block_index}")
    e = ((task.n1 + task.n2) * sigma / task.targets["N"] - 1) ** 2
    return BlockMoments(count=task.size, sums={"N": (float(e.sum()), float((e * e).sum()), 0.0)})


def rows_to_frame(rows: Sequence[ExperimentRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=CSV_COLUMNS)


def consistency_to_frame(reports: Sequence[ConsistencyReport]) -> pd.DataFrame:
    records = [row.model_dump() for report in reports for row in report.rows]
    return pd.DataFrame(records, columns=CONSISTENCY_COLUMNS)


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> pd.DataFrame:
    """Run any experiment kind and return its long-format table"""
    if config.experiment == "bias":
        return rows_to_frame(run_bias(config, threads))
    if config.experiment == "qmse":
        return rows_to_frame(run_qmse(config, threads))

    reports = [
        run_consistency(spec_config, config.n_sequence, config.nsim, config.seed, threads, config.block_size)
        for spec_config in config.expand_specs()
    ]
    for report in reports:
        verdict = "decreasing" if report.monotone else "NOT decreasing"
        logger.info(f"{report.spec}: L2 error {verdict}")
    return consistency_to_frame(reports)
