"""
Population quantities of a distribution pair and the variances derived from them.

Values are plain floats for continuous and truncated families, and Fractions when
built from a finite distribution pair with rational probabilities; all methods
keep the input's arithmetic.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Real = Union[float, Fraction]


@dataclass(frozen=True)
class PlacementMoments:
    """Compound-symmetry covariance of the placements of each group and E(Q_i^2)"""
    s1_sq: Real  # Var(R*_1k)
    rho1: Real  # Cov(R*_1k, R*_1k') for k != k'
    s2_sq: Real
    rho2: Real
    expected_q1_sq: Real
    expected_q2_sq: Real


@dataclass(frozen=True)
class GroundTruth:
    theta: Real
    sigma1_sq: Real  # Var(F2(X1))
    sigma2_sq: Real  # Var(F1(X2))
    tau: Real  # P(X1 = X2)
    continuous: bool = False

    @property
    def kernel(self) -> Real:
        """theta(1 - theta) - tau/4"""
        return self.theta * (1 - self.theta) - self.tau / 4

    @property
    def van_dantzig_gap(self) -> Real:
        """theta(1 - theta) - sigma1^2 - sigma2^2; never negative"""
        return self.theta * (1 - self.theta) - self.sigma1_sq - self.sigma2_sq

    def sigma_N_sq(self, n1: int, n2: int) -> Real:
        """Exact finite-sample variance of theta_hat"""
        return ((n2 - 1) * self.sigma1_sq + (n1 - 1) * self.sigma2_sq + self.kernel) / (n1 * n2)

    def s_N_sq(self, n1: int, n2: int) -> Real:
        """Asymptotic variance of sqrt(N) theta_hat"""
        N = n1 + n2
        return N * (n2 * self.sigma1_sq + n1 * self.sigma2_sq) / (n1 * n2)

    def bias_dl(self, n1: int, n2: int) -> Real:
        return (self.van_dantzig_gap - self.tau / 4) / (n1 * n2)

    def bias_pm(self, n1: int, n2: int) -> Real:
        """Leading term only; the O(1/N) remainder is not modeled"""
        return (2 * self.van_dantzig_gap - self.tau / 4) / (n1 * n2)

    def placement_moments(self, n1: int, n2: int) -> PlacementMoments:
        s1_sq = n2 * ((n2 - 1) * self.sigma1_sq + self.kernel)
        rho1 = n2 * self.sigma2_sq
        s2_sq = n1 * ((n1 - 1) * self.sigma2_sq + self.kernel)
        rho2 = n1 * self.sigma1_sq
        return PlacementMoments(
            s1_sq=s1_sq,
            rho1=rho1,
            s2_sq=s2_sq,
            rho2=rho2,
            expected_q1_sq=(n1 - 1) * (s1_sq - rho1),
            expected_q2_sq=(n2 - 1) * (s2_sq - rho2),
        )

    def invariant_violations(self, n1: int, n2: int, tolerance: float = 1e-12) -> list[str]:
        failures = []
        if self.sigma1_sq < -tolerance or self.sigma2_sq < -tolerance:
            failures.append("negative sigma_i^2")
        if not -tolerance <= self.tau <= 1 + tolerance:
            failures.append("tau outside [0, 1]")
        if self.van_dantzig_gap < -tolerance:
            failures.append("sigma1^2 + sigma2^2 exceeds theta(1 - theta)")
        m = min(n1, n2)
        if self.sigma_N_sq(n1, n2) > self.theta * (1 - self.theta) / m + tolerance:
            failures.append("sigma_N^2 exceeds theta(1 - theta)/m")
        if self.continuous and abs(self.tau) > tolerance:
            failures.append("continuous pair with positive tie probability")
        return failures


def bias_DL(truth, n1: int, n2: int) -> Real:
    """Closed-form bias of the DeLong estimator; accepts a GroundTruth or a spec"""
    return _truth_of(truth).bias_dl(n1, n2)


def bias_PM(truth, n1: int, n2: int) -> Real:
    return _truth_of(truth).bias_pm(n1, n2)


def _truth_of(obj) -> GroundTruth:
    if isinstance(obj, GroundTruth):
        return obj
    return obj.ground_truth()


def normalized_cdf(support, probs, x) -> Real:
    """P(X < x) + P(X = x)/2 for a finite distribution"""
    below = sum((p for v, p in zip(support, probs) if v < x), 0 * probs[0])
    at = sum((p for v, p in zip(support, probs) if v == x), 0 * probs[0])
    return below + at / 2


def discrete_ground_truth(support1, probs1, support2, probs2) -> GroundTruth:
    """Exact sums over finite supports; probabilities may be floats or Fractions"""
    F1 = {x: normalized_cdf(support1, probs1, x) for x in support2}
    F2 = {x: normalized_cdf(support2, probs2, x) for x in support1}
    mass2 = dict(zip(support2, probs2))

    theta = sum(p * F1[x] for x, p in zip(support2, probs2))
    sigma2_sq = sum(p * F1[x] ** 2 for x, p in zip(support2, probs2)) - theta ** 2
    sigma1_sq = sum(p * F2[x] ** 2 for x, p in zip(support1, probs1)) - (1 - theta) ** 2
    tau = sum(p * mass2.get(x, 0) for x, p in zip(support1, probs1))
    return GroundTruth(theta=theta, sigma1_sq=sigma1_sq, sigma2_sq=sigma2_sq, tau=tau)
