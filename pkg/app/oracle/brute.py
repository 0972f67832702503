"""
Reference implementation by explicit loops over the count function.

Nothing here ranks or sorts; every quantity comes from count(), count_plus() and
count_minus() evaluated pair by pair. With exact=True all arithmetic is rational.
"""
from dataclasses import dataclass
from fractions import Fraction

from app.estimators import FORMULAS
from app.exceptions import InsufficientSampleError
from app.models import TwoSample
from app.ranking import count, count_minus, count_plus


@dataclass(frozen=True)
class BruteResult:
    theta: object
    tau: object
    q1_sq: object
    q2_sq: object
    count_sums: dict
    estimates: dict  # estimator id -> value

    def as_floats(self) -> dict[str, float]:
        values = {"theta": self.theta, "tau": self.tau, "q1_sq": self.q1_sq, "q2_sq": self.q2_sq}
        values.update(self.count_sums)
        values.update(self.estimates)
        return {k: float(v) for k, v in values.items()}


def brute_estimators(sample: TwoSample, exact: bool = False) -> BruteResult:
    x1, x2 = sample.group1, sample.group2
    n1, n2 = sample.n1, sample.n2
    if n1 < 2 or n2 < 2:
        raise InsufficientSampleError(n1, n2)
    num = Fraction if exact else float

    # c[k][l] = count(X1k, X2l)
    c = [[num(count(a, b)) for b in x2] for a in x1]
    ties = sum(count_plus(a, b) - count_minus(a, b) for a in x1 for b in x2)

    pairs = n1 * n2
    total = sum(sum(row) for row in c)
    theta = total / num(pairs)
    tau = num(ties) / num(pairs)

    placements1 = [sum(num(count(b, a)) for b in x2) for a in x1]
    placements2 = [sum(c[k][l] for k in range(n1)) for l in range(n2)]
    q1_sq = _centered_sq(placements1, num)
    q2_sq = _centered_sq(placements2, num)

    A = sum(c[k][l] * c[k][l] for k in range(n1) for l in range(n2))
    B = sum(
        c[k][l] * c[j][l]
        for l in range(n2) for k in range(n1) for j in range(n1) if j != k
    )
    C = sum(
        c[k][l] * c[k][i]
        for k in range(n1) for l in range(n2) for i in range(n2) if i != l
    )
    D = sum(
        c[k][l] * c[j][i]
        for k in range(n1) for j in range(n1) if j != k
        for l in range(n2) for i in range(n2) if i != l
    )
    d_N = n1 * (n1 - 1) * n2 * (n2 - 1)

    estimates = {
        estimator_id: formula(theta, tau, q1_sq, q2_sq, n1, n2)
        for estimator_id, formula in FORMULAS.items()
        if estimator_id != "N"
    }
    # unbiased estimator through the count-sum route
    estimates["N"] = theta * theta - D / num(d_N)

    return BruteResult(
        theta=theta,
        tau=tau,
        q1_sq=q1_sq,
        q2_sq=q2_sq,
        count_sums={"A": A, "B": B, "C": C, "D": D, "E": total, "F": num(ties)},
        estimates=estimates,
    )


def _centered_sq(values, num):
    mean = sum(values) / num(len(values))
    return sum((v - mean) ** 2 for v in values)
