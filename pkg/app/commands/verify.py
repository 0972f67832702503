"""`verify`: exact and randomized checks of the estimator theory"""
import argparse
from decimal import Decimal, localcontext
from fractions import Fraction

from app.analytic.ground_truth import bias_DL
from app.config import settings
from app.exceptions import InvalidSampleError
from app.oracle import (
    FIXTURES,
    bound_search,
    count_sum_violations,
    exact_expectations,
    get_fixture,
    identity_sweep,
)

ESTIMATORS = ("N", "SHS", "DL", "PM", "HM")


def register(subparsers):
    parser = subparsers.add_parser("verify", help="Run verification oracles")
    checks = parser.add_subparsers(dest="check", required=True)

    unbiased = checks.add_parser("unbiasedness", help="exact E[sigma_N_hat^2] = sigma_N^2 by enumeration")
    _add_enumeration_args(unbiased)
    unbiased.set_defaults(handler=run_unbiasedness)

    bias = checks.add_parser("bias", help="exact bias of one estimator by enumeration")
    _add_enumeration_args(bias)
    bias.add_argument("--estimator", choices=ESTIMATORS, default="DL")
    bias.set_defaults(handler=run_bias)

    bound = checks.add_parser("bound", help="exhaustive search for the sharp upper bound")
    bound.add_argument("--n1", type=int, default=2)
    bound.add_argument("--n2", type=int, default=2)
    bound.add_argument("--grid", default="1,2,3,4", help="comma-separated candidate values")
    bound.add_argument("--budget", type=int, default=None)
    bound.set_defaults(handler=run_bound)

    identities = checks.add_parser("identities", help="randomized sweep of bounds and identities")
    identities.add_argument("--nsim", type=int, default=settings.default_nsim)
    identities.add_argument("--seed", type=int, default=settings.default_seed)
    identities.add_argument("--brute-samples", type=int, default=1000)
    identities.set_defaults(handler=run_identities)


def _add_enumeration_args(parser):
    parser.add_argument("--n1", type=int, default=2)
    parser.add_argument("--n2", type=int, default=2)
    parser.add_argument("--fixture", choices=sorted(FIXTURES), action="append",
                        help="finite distribution pair (repeatable; default: all)")
    parser.add_argument("--budget", type=int, default=None, help="maximum ordered outcomes to enumerate")


def exact_decimal(value: Fraction, digits: int = 30) -> str:
    """Rational value as a decimal string, plus the fraction when it does not terminate"""
    with localcontext() as ctx:
        ctx.prec = digits
        decimal = Decimal(value.numerator) / Decimal(value.denominator)
    text = f"{decimal:f}" if decimal == decimal.to_integral_value() or abs(decimal) >= Decimal("1e-6") else f"{decimal:e}"
    if Fraction(decimal) != value:
        text += f" ({value})"
    return text


def _verdict(passed: bool) -> str:
    return "PASS" if passed else "FAIL"


def _fixtures(args):
    return [get_fixture(name) for name in (args.fixture or sorted(FIXTURES))]


def run_unbiasedness(args: argparse.Namespace) -> int:
    failed = 0
    for dist in _fixtures(args):
        totals, visited = exact_expectations(dist, args.n1, args.n2, ("N",), args.budget)
        truth = dist.ground_truth().sigma_N_sq(args.n1, args.n2)
        problems = count_sum_violations(dist, args.n1, args.n2, args.budget)
        passed = totals["N"] == truth and not problems
        failed += not passed
        print(
            f"{_verdict(passed)} {dist.name} n1={args.n1} n2={args.n2} outcomes={visited}: "
            f"E[sigma_N_hat^2] = {exact_decimal(totals['N'])}, sigma_N^2 = {exact_decimal(truth)}"
        )
        for problem in problems[:5]:
            print(f"  {problem}")
    return 1 if failed else 0


def run_bias(args: argparse.Namespace) -> int:
    failed = 0
    for dist in _fixtures(args):
        truth = dist.ground_truth()
        totals, _ = exact_expectations(dist, args.n1, args.n2, (args.estimator,), args.budget)
        bias = totals[args.estimator] - truth.sigma_N_sq(args.n1, args.n2)

        line = f"{dist.name} n1={args.n1} n2={args.n2} {args.estimator}: bias = {exact_decimal(bias)}"
        if args.estimator == "DL":
            expected = bias_DL(truth, args.n1, args.n2)
            passed = bias == expected
            line = f"{_verdict(passed)} {line}, closed form = {exact_decimal(expected)}"
        elif args.estimator == "N":
            passed = bias == 0
            line = f"{_verdict(passed)} {line}"
        else:
            passed = True
            line = f"INFO {line}"
        failed += not passed
        print(line)
    return 1 if failed else 0


def run_bound(args: argparse.Namespace) -> int:
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip()]
    except ValueError:
        raise InvalidSampleError(f"--grid must be comma-separated numbers, got {args.grid!r}") from None
    if not grid:
        raise InvalidSampleError("--grid is empty")

    result = bound_search(args.n1, args.n2, grid, args.budget)
    best = result.best_sample
    print(
        f"{_verdict(result.passed)} n1={args.n1} n2={args.n2} grid={list(result.grid)} "
        f"samples={result.samples_checked}: max ratio = {exact_decimal(result.best_ratio)}"
    )
    if best is not None:
        print(f"  attained at group1={list(best.group1)} group2={list(best.group2)}")
    for violation in result.violations[:5]:
        print(f"  {violation}")
    return 0 if result.passed else 1


def run_identities(args: argparse.Namespace) -> int:
    if args.nsim < 1:
        raise InvalidSampleError(f"--nsim must be positive, got {args.nsim}")
    report = identity_sweep(args.nsim, args.seed, brute_samples=args.brute_samples)
    print(
        f"{_verdict(report.passed)} identities: {report.samples} samples, "
        f"{report.brute_samples} brute-force comparisons, "
        f"max identity error {report.max_identity_error:.3e}, max brute error {report.max_brute_error:.3e}"
    )
    for name, hits in sorted(report.failures.items()):
        print(f"  {name}: {hits}")
    return 0 if report.passed else 1
