# Reference implementations and exact verification
from app.oracle.brute import BruteResult, brute_estimators
from app.oracle.enumeration import (
    BoundSearchResult,
    ExactExpectation,
    bound_search,
    count_sum_violations,
    exact_bias,
    exact_expectations,
    exact_unbiasedness,
)
from app.oracle.fixtures import FIXTURES, FiniteDistPair, get_fixture
from app.oracle.sweep import IdentityReport, identity_sweep

__all__ = [
    "BoundSearchResult",
    "BruteResult",
    "ExactExpectation",
    "FIXTURES",
    "FiniteDistPair",
    "IdentityReport",
    "bound_search",
    "brute_estimators",
    "count_sum_violations",
    "exact_bias",
    "exact_expectations",
    "exact_unbiasedness",
    "get_fixture",
    "identity_sweep",
]
