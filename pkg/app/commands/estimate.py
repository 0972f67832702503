"""`estimate`: all estimators on user data"""
import argparse
import io
from pathlib import Path

import pandas as pd
from loguru import logger
from pydantic import ValidationError

from app.config import settings
from app.estimators import effect_summary, upper_bound, variance_estimates, wald_ci
from app.exceptions import InsufficientSampleError, InvalidSampleError
from app.models import EstimateReport, InputDataset


def register(subparsers):
    parser = subparsers.add_parser("estimate", help="Estimate theta and its variance from two groups")
    parser.add_argument("--group1", type=Path, help="file with the group 1 values, one per line")
    parser.add_argument("--group2", type=Path, help="file with the group 2 values, one per line")
    parser.add_argument("--data", type=Path, help="two-column file: group label (1 or 2), value")
    parser.add_argument("--level", type=float, default=None, help=f"Wald interval level (default {settings.ci_level})")
    parser.add_argument("--json", action="store_true", help="print the report as JSON")
    parser.set_defaults(handler=run)


def _read_table(path: Path) -> pd.DataFrame:
    """Whitespace-, comma- or semicolon-separated text, '#' comments allowed"""
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise InvalidSampleError(f"input file not found: {path}") from None
    lines = [line.split("#", 1)[0].replace(",", " ").replace(";", " ").strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        raise InvalidSampleError(f"input file is empty: {path}")
    try:
        return pd.read_csv(io.StringIO("\n".join(lines)), header=None, sep=r"\s+", dtype=str)
    except pd.errors.ParserError as e:
        raise InvalidSampleError(f"{path}: inconsistent number of columns: {e}") from e


def _parse_values(values, source: str) -> list[float]:
    parsed = []
    for raw in values:
        try:
            parsed.append(float(str(raw).strip()))
        except ValueError:
            raise InvalidSampleError(f"{source}: cannot parse {raw!r} as a number") from None
    return parsed


def _strip_header(table: pd.DataFrame, column: int) -> pd.DataFrame:
    first = str(table.iloc[0, column]).strip()
    try:
        float(first)
    except ValueError:
        return table.iloc[1:]
    return table


def read_column(path: Path) -> list[float]:
    table = _read_table(path)
    if table.shape[1] != 1:
        raise InvalidSampleError(f"{path}: expected a single column, found {table.shape[1]}")
    table = _strip_header(table, 0)
    return _parse_values(table.iloc[:, 0], str(path))


def read_grouped(path: Path) -> tuple[list[float], list[float]]:
    table = _read_table(path)
    if table.shape[1] != 2:
        raise InvalidSampleError(f"{path}: expected two columns (group, value), found {table.shape[1]}")
    table = _strip_header(table, 1)
    labels = table.iloc[:, 0].str.strip()
    unknown = sorted(set(labels) - {"1", "2"})
    if unknown:
        raise InvalidSampleError(f"{path}: group labels must be 1 or 2, found {unknown}")
    values = table.iloc[:, 1]
    return (
        _parse_values(values[labels == "1"], str(path)),
        _parse_values(values[labels == "2"], str(path)),
    )


def load_dataset(args) -> InputDataset:
    if args.data is not None:
        if args.group1 is not None or args.group2 is not None:
            raise InvalidSampleError("use either --data or --group1/--group2, not both")
        group1, group2 = read_grouped(args.data)
        source = str(args.data)
    elif args.group1 is not None and args.group2 is not None:
        group1, group2 = read_column(args.group1), read_column(args.group2)
        source = f"{args.group1}, {args.group2}"
    else:
        raise InvalidSampleError("give --data FILE or both --group1 FILE and --group2 FILE")

    if not group1 or not group2:
        raise InsufficientSampleError(len(group1), len(group2), required=2)
    try:
        return InputDataset(group1=group1, group2=group2, source=source)
    except ValidationError as e:
        raise InvalidSampleError(f"{source}: values must be finite numbers: {e}") from e


def build_report(dataset: InputDataset, level: float) -> EstimateReport:
    sample = dataset.to_sample()
    estimates = variance_estimates(sample)
    summary = effect_summary(sample)
    ci = wald_ci(summary.theta_hat, estimates.sigma_N_sq, level)

    warnings = []
    if estimates.sigma_SHS_sq < 0:
        warnings.append(f"SHS variance estimate is negative ({estimates.sigma_SHS_sq!r})")
    if ci.degenerate:
        warnings.append(f"confidence interval is degenerate at {ci.lower!r}")
    for message in warnings:
        logger.warning(message)

    return EstimateReport(
        group1=list(sample.group1),
        group2=list(sample.group2),
        summary=summary,
        estimates=estimates,
        upper_bound=upper_bound(sample),
        ci=ci,
        warnings=warnings,
    )


def format_report(report: EstimateReport) -> str:
    s, e, ci = report.summary, report.estimates, report.ci
    lines = [
        f"n1 = {s.n1}, n2 = {s.n2}",
        f"theta_hat        {s.theta_hat!r}",
        f"tau_hat          {s.tau_hat!r}",
        f"Q1^2             {s.q1_sq!r}",
        f"Q2^2             {s.q2_sq!r}",
        f"sigma_N^2        {e.sigma_N_sq!r}",
        f"sigma_SHS^2      {e.sigma_SHS_sq!r}",
        f"sigma_DL^2       {e.sigma_DL_sq!r}",
        f"sigma_PM^2       {e.sigma_PM_sq!r}",
        f"sigma_HM^2       {e.sigma_HM_sq!r}",
        f"upper bound      {report.upper_bound!r}",
        f"{ci.level:.0%} Wald CI     [{ci.lower!r}, {ci.upper!r}]",
    ]
    lines.extend(f"warning: {message}" for message in report.warnings)
    return "\n".join(lines)


def run(args: argparse.Namespace) -> int:
    dataset = load_dataset(args)
    level = settings.ci_level if args.level is None else args.level
    report = build_report(dataset, level)
    print(report.model_dump_json(indent=2) if args.json else format_report(report))
    return 0
