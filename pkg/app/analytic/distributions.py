"""
Distribution pairs (F1, F2) used by the simulation harness.

Every family has a seeded sampler and a ground truth. Continuous families get
theta, sigma1^2, sigma2^2 either in closed form or by adaptive quadrature of the
normalized CDFs; discrete families use exact sums over their (truncated) support.
"""
from abc import ABC, abstractmethod
from typing import Callable, Optional
import math

import numpy as np
from loguru import logger
from scipy import integrate
from scipy.special import betainc, ndtr, ndtri
from scipy.stats import norm, poisson

from app.analytic.ground_truth import GroundTruth, discrete_ground_truth
from app.exceptions import ConfigError, TruncationError
from app.models import SpecConfig

QUAD_EPSABS = 1e-10
POISSON_TAIL = 1e-12
MAX_SUPPORT = 100_000


class DistributionSpec(ABC):
    """Base class for a named pair of group distributions"""

    name: str = ""
    kind: str = "continuous"

    def __init__(self, **params: float):
        self.params = {k: float(v) for k, v in params.items()}

    @abstractmethod
    def sample(self, rng: np.random.Generator, n1: int, n2: int, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw `size` replications: arrays of shape (size, n1) and (size, n2)"""
        pass

    @abstractmethod
    def ground_truth(self) -> GroundTruth:
        pass

    @abstractmethod
    def cdf1(self, x):
        """Right-continuous CDF of group 1"""
        pass

    @abstractmethod
    def cdf2(self, x):
        pass

    def to_config(self) -> SpecConfig:
        return SpecConfig(name=self.name, params=self.params)

    @property
    def label(self) -> str:
        return self.to_config().label

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label}>"


class ContinuousSpec(DistributionSpec):
    kind = "continuous"
    # quad limits and breakpoints of the densities
    lower: float = -math.inf
    upper: float = math.inf
    breakpoints: tuple[float, ...] = ()

    @abstractmethod
    def pdf1(self, x):
        pass

    @abstractmethod
    def pdf2(self, x):
        pass

    def quadrature_ground_truth(self) -> GroundTruth:
        """theta and sigma_i^2 by adaptive quadrature; tau is 0 for continuous pairs"""
        theta = self._integrate(lambda x: self.cdf1(x) * self.pdf2(x))
        f1_sq = self._integrate(lambda x: self.cdf1(x) ** 2 * self.pdf2(x))
        f2_sq = self._integrate(lambda x: self.cdf2(x) ** 2 * self.pdf1(x))
        return GroundTruth(
            theta=theta,
            sigma1_sq=f2_sq - (1 - theta) ** 2,
            sigma2_sq=f1_sq - theta ** 2,
            tau=0.0,
            continuous=True,
        )

    def ground_truth(self) -> GroundTruth:
        return self.quadrature_ground_truth()

    def _integrate(self, func: Callable[[float], float]) -> float:
        kwargs = {"epsabs": QUAD_EPSABS, "epsrel": 1e-12, "limit": 200}
        if self.breakpoints and math.isfinite(self.lower) and math.isfinite(self.upper):
            kwargs["points"] = self.breakpoints
        value, error = integrate.quad(func, self.lower, self.upper, **kwargs)
        if error > 10 * QUAD_EPSABS:
            logger.warning(f"{self.label}: quadrature error estimate {error:.2e}")
        return float(value)


class NormalSpec(ContinuousSpec):
    """X1 ~ N(0, sd1^2), X2 ~ N(delta, sd2^2)"""
    name = "normal"

    def __init__(self, delta: float, sd1: float = 1.0, sd2: float = 1.0):
        if sd1 <= 0 or sd2 <= 0:
            raise ConfigError(f"normal: standard deviations must be positive, got sd1={sd1}, sd2={sd2}")
        super().__init__(delta=delta, sd1=sd1, sd2=sd2)
        self.delta = float(delta)
        self.sd1 = float(sd1)
        self.sd2 = float(sd2)

    @property
    def theta(self) -> float:
        return float(ndtr(self.delta / math.hypot(self.sd1, self.sd2)))

    def cdf1(self, x):
        return ndtr(x / self.sd1)

    def cdf2(self, x):
        return ndtr((x - self.delta) / self.sd2)

    def pdf1(self, x):
        return norm.pdf(x, scale=self.sd1)

    def pdf2(self, x):
        return norm.pdf(x, loc=self.delta, scale=self.sd2)

    def sample(self, rng, n1, n2, size):
        x1 = rng.normal(0.0, self.sd1, size=(size, n1))
        x2 = rng.normal(self.delta, self.sd2, size=(size, n2))
        return x1, x2


class ExponentialSpec(ContinuousSpec):
    """Exponential groups with rates rate1 and rate2; theta = rate1 / (rate1 + rate2)"""
    name = "exponential"
    lower = 0.0

    def __init__(self, rate1: float, rate2: float = 1.0):
        if rate1 <= 0 or rate2 <= 0:
            raise ConfigError(f"exponential: rates must be positive, got {rate1}, {rate2}")
        super().__init__(rate1=rate1, rate2=rate2)
        self.rate1 = float(rate1)
        self.rate2 = float(rate2)

    def cdf1(self, x):
        return -np.expm1(-self.rate1 * x)

    def cdf2(self, x):
        return -np.expm1(-self.rate2 * x)

    def pdf1(self, x):
        return self.rate1 * np.exp(-self.rate1 * x)

    def pdf2(self, x):
        return self.rate2 * np.exp(-self.rate2 * x)

    def sample(self, rng, n1, n2, size):
        x1 = rng.exponential(1.0 / self.rate1, size=(size, n1))
        x2 = rng.exponential(1.0 / self.rate2, size=(size, n2))
        return x1, x2

    def ground_truth(self) -> GroundTruth:
        a, b = self.rate1, self.rate2
        theta = a / (a + b)
        return GroundTruth(
            theta=theta,
            # Var(exp(-b X1)) and Var(exp(-a X2))
            sigma1_sq=a / (a + 2 * b) - theta ** 2,
            sigma2_sq=b / (b + 2 * a) - (1 - theta) ** 2,
            tau=0.0,
            continuous=True,
        )


class DmaxSpec(ContinuousSpec):
    """
    Pair whose theta_hat has the largest possible variance for its theta.

    F1 puts mass theta uniformly on (0, 1) and mass 1 - theta uniformly on (2, 3);
    F2 is uniform on (1, 2), so F1 is constant on the support of F2.
    """
    name = "dmax"
    lower = 0.0
    upper = 3.0
    breakpoints = (1.0, 2.0)

    def __init__(self, theta: float):
        if not 0.0 < theta < 1.0:
            raise ConfigError(f"dmax: theta must lie strictly between 0 and 1, got {theta}")
        super().__init__(theta=theta)
        self.theta = float(theta)

    def cdf1(self, x):
        x = np.asarray(x, dtype=float)
        t = self.theta
        return np.select(
            [x < 0, x < 1, x < 2, x < 3],
            [0.0, t * x, t, t + (1 - t) * (x - 2)],
            default=1.0,
        )

    def cdf2(self, x):
        return np.clip(np.asarray(x, dtype=float) - 1.0, 0.0, 1.0)

    def pdf1(self, x):
        x = np.asarray(x, dtype=float)
        t = self.theta
        return np.select([(0 <= x) & (x < 1), (2 <= x) & (x < 3)], [t, 1 - t], default=0.0)

    def pdf2(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((1 <= x) & (x < 2), 1.0, 0.0)

    def quantile1(self, u):
        u = np.asarray(u, dtype=float)
        t = self.theta
        return np.where(u <= t, u / t, 2.0 + (u - t) / (1 - t))

    def sample(self, rng, n1, n2, size):
        x1 = self.quantile1(rng.random(size=(size, n1)))
        x2 = 1.0 + rng.random(size=(size, n2))
        return x1, x2

    def ground_truth(self) -> GroundTruth:
        t = self.theta
        return GroundTruth(theta=t, sigma1_sq=t * (1 - t), sigma2_sq=0.0, tau=0.0, continuous=True)


class DiscreteSpec(DistributionSpec):
    """Pair with finite (possibly truncated) supports"""
    kind = "discrete"

    def __init__(self, support1, probs1, support2, probs2, **params: float):
        super().__init__(**params)
        self.support1 = np.asarray(support1, dtype=float)
        self.probs1 = np.asarray(probs1, dtype=float)
        self.support2 = np.asarray(support2, dtype=float)
        self.probs2 = np.asarray(probs2, dtype=float)

    def _cdf(self, support, probs, x):
        return np.sum(np.where(support[None, :] <= np.atleast_1d(x)[:, None], probs[None, :], 0.0), axis=1)

    def cdf1(self, x):
        return self._cdf(self.support1, self.probs1, x)

    def cdf2(self, x):
        return self._cdf(self.support2, self.probs2, x)

    def sample(self, rng, n1, n2, size):
        x1 = rng.choice(self.support1, p=self.probs1, size=(size, n1))
        x2 = rng.choice(self.support2, p=self.probs2, size=(size, n2))
        return x1, x2

    def ground_truth(self) -> GroundTruth:
        return discrete_ground_truth(
            [float(v) for v in self.support1],
            [float(p) for p in self.probs1],
            [float(v) for v in self.support2],
            [float(p) for p in self.probs2],
        )


def _truncated_poisson(lam: float) -> tuple[np.ndarray, np.ndarray]:
    k_max = int(poisson.ppf(1.0 - POISSON_TAIL, lam))
    if k_max + 1 > MAX_SUPPORT:
        raise TruncationError(f"poisson({lam}) needs {k_max + 1} support points, limit is {MAX_SUPPORT}")
    support = np.arange(k_max + 1)
    probs = poisson.pmf(support, lam)
    mass = probs.sum()
    if mass < 1.0 - 2 * POISSON_TAIL:
        raise TruncationError(f"poisson({lam}) truncated mass {mass!r} misses the {POISSON_TAIL} tail tolerance")
    return support, probs / mass


class PoissonSpec(DiscreteSpec):
    name = "poisson"

    def __init__(self, lam1: float, lam2: float):
        if lam1 <= 0 or lam2 <= 0:
            raise ConfigError(f"poisson: means must be positive, got {lam1}, {lam2}")
        s1, p1 = _truncated_poisson(lam1)
        s2, p2 = _truncated_poisson(lam2)
        logger.debug(f"poisson({lam1}, {lam2}): supports truncated at {s1[-1]}, {s2[-1]}")
        super().__init__(s1, p1, s2, p2, lam1=lam1, lam2=lam2)
        self.lam1 = float(lam1)
        self.lam2 = float(lam2)

    def sample(self, rng, n1, n2, size):
        x1 = rng.poisson(self.lam1, size=(size, n1)).astype(float)
        x2 = rng.poisson(self.lam2, size=(size, n2)).astype(float)
        return x1, x2


ORDINAL_LEVELS = 5


def ordinal_probabilities(a: float, b: float) -> np.ndarray:
    """Cell probabilities of INT(5 * Beta(a, b)) + 1 on {1, ..., 5}"""
    cuts = betainc(a, b, np.arange(ORDINAL_LEVELS + 1) / ORDINAL_LEVELS)
    return np.diff(cuts)


class Ordinal5Spec(DiscreteSpec):
    """Five-point ordinal scale obtained by discretizing Beta variables"""
    name = "ordinal5"

    def __init__(self, a1: float, b1: float, a2: float, b2: float):
        if min(a1, b1, a2, b2) <= 0:
            raise ConfigError(f"ordinal5: Beta shapes must be positive, got {(a1, b1, a2, b2)}")
        support = np.arange(1, ORDINAL_LEVELS + 1)
        super().__init__(
            support, ordinal_probabilities(a1, b1), support, ordinal_probabilities(a2, b2),
            a1=a1, b1=b1, a2=a2, b2=b2,
        )

    def _discretize(self, beta_draws: np.ndarray) -> np.ndarray:
        return np.minimum(np.floor(ORDINAL_LEVELS * beta_draws) + 1, ORDINAL_LEVELS)

    def sample(self, rng, n1, n2, size):
        p = self.params
        x1 = self._discretize(rng.beta(p["a1"], p["b1"], size=(size, n1)))
        x2 = self._discretize(rng.beta(p["a2"], p["b2"], size=(size, n2)))
        return x1, x2


# Factories

def normal_spec(
    theta: Optional[float] = None,
    delta: Optional[float] = None,
    sd1: float = 1.0,
    sd2: float = 1.0,
) -> NormalSpec:
    """Normal shift pair given either theta or the shift delta"""
    if (theta is None) == (delta is None):
        raise ConfigError("normal: give exactly one of `theta` or `delta`")
    if theta is not None:
        if not 0.0 < theta < 1.0:
            raise ConfigError(f"normal: theta must lie strictly between 0 and 1, got {theta}")
        delta = float(ndtri(theta)) * math.hypot(sd1, sd2)
    return NormalSpec(delta=delta, sd1=sd1, sd2=sd2)


def exponential_spec(
    theta: Optional[float] = None,
    rate1: Optional[float] = None,
    rate2: float = 1.0,
) -> ExponentialSpec:
    """Exponential pair given either theta (with rate2 = 1) or explicit rates"""
    if (theta is None) == (rate1 is None):
        raise ConfigError("exponential: give exactly one of `theta` or `rate1`")
    if theta is not None:
        if not 0.0 < theta < 1.0:
            raise ConfigError(f"exponential: theta must lie strictly between 0 and 1, got {theta}")
        rate1 = rate2 * theta / (1.0 - theta)
    return ExponentialSpec(rate1=rate1, rate2=rate2)


def dmax_spec(theta: float) -> DmaxSpec:
    return DmaxSpec(theta=theta)


def poisson_spec(lam1: float, lam2: float) -> PoissonSpec:
    return PoissonSpec(lam1=lam1, lam2=lam2)


def ordinal5_spec(a1: float, b1: float, a2: float, b2: float) -> Ordinal5Spec:
    return Ordinal5Spec(a1=a1, b1=b1, a2=a2, b2=b2)


FAMILIES: dict[str, Callable[..., DistributionSpec]] = {
    "normal": normal_spec,
    "exponential": exponential_spec,
    "dmax": dmax_spec,
    "poisson": poisson_spec,
    "ordinal5": ordinal5_spec,
}


def build_spec(name: str, **params: float) -> DistributionSpec:
    factory = FAMILIES.get(name)
    if factory is None:
        raise ConfigError(f"unknown distribution family {name!r}; known: {', '.join(sorted(FAMILIES))}")
    try:
        return factory(**params)
    except TypeError as e:
        raise ConfigError(f"{name}: invalid parameters {params}: {e}") from e


def spec_from_config(config: SpecConfig) -> DistributionSpec:
    return build_spec(config.name, **config.params)
