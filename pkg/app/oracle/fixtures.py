"""
Finite distribution pairs with rational probabilities, for exact enumeration.
"""
from dataclasses import dataclass
from fractions import Fraction

from app.analytic.ground_truth import GroundTruth, discrete_ground_truth
from app.exceptions import ConfigError


@dataclass(frozen=True)
class FiniteDistPair:
    name: str
    support1: tuple[int, ...]
    probs1: tuple[Fraction, ...]
    support2: tuple[int, ...]
    probs2: tuple[Fraction, ...]

    def __post_init__(self):
        for label, support, probs in (
            ("group1", self.support1, self.probs1),
            ("group2", self.support2, self.probs2),
        ):
            if not support or len(support) != len(probs):
                raise ConfigError(f"{self.name}: {label} support and probabilities must be non-empty and aligned")
            if list(support) != sorted(set(support)):
                raise ConfigError(f"{self.name}: {label} support must be strictly increasing")
            if any(not isinstance(p, Fraction) or p <= 0 for p in probs):
                raise ConfigError(f"{self.name}: {label} probabilities must be positive Fractions")
            if sum(probs) != 1:
                raise ConfigError(f"{self.name}: {label} probabilities sum to {sum(probs)}, not 1")

    def ground_truth(self) -> GroundTruth:
        return discrete_ground_truth(
            [Fraction(v) for v in self.support1],
            list(self.probs1),
            [Fraction(v) for v in self.support2],
            list(self.probs2),
        )

    def outcome_count(self, n1: int, n2: int) -> int:
        """Ordered outcomes |support1|^n1 * |support2|^n2"""
        return len(self.support1) ** n1 * len(self.support2) ** n2


def _pair(name, support1, probs1, support2=None, probs2=None) -> FiniteDistPair:
    support2 = support1 if support2 is None else support2
    return FiniteDistPair(
        name=name,
        support1=tuple(support1),
        probs1=tuple(Fraction(p) for p in probs1),
        support2=tuple(support2),
        probs2=tuple(Fraction(p) for p in probs2),
    )


FIXTURES: dict[str, FiniteDistPair] = {
    pair.name: pair
    for pair in (
        _pair("bernoulli_half", (0, 1), ("1/2", "1/2"), probs2=("1/2", "1/2")),
        _pair("bernoulli_skewed", (0, 1), ("3/4", "1/4"), probs2=("1/4", "3/4")),
        _pair("three_point", (0, 1, 2), ("1/2", "1/4", "1/4"), probs2=("1/4", "1/4", "1/2")),
        _pair("three_point_shifted", (0, 1, 2), ("1/3", "1/3", "1/3"), (1, 2, 3), ("1/6", "1/3", "1/2")),
        _pair("point_mass", (1,), ("1",), probs2=("1",)),
        _pair("disjoint", (0, 1), ("1/2", "1/2"), (2, 3), ("1/3", "2/3")),
    )
}


def get_fixture(name: str) -> FiniteDistPair:
    try:
        return FIXTURES[name]
    except KeyError:
        raise ConfigError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}") from None
