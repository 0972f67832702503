from pathlib import Path

import pytest
from hypothesis import strategies as st

from app.models import TwoSample

EXAMPLES_DIR = Path(__file__).resolve().parent.parent / "data" / "examples"


@pytest.fixture
def counterexample() -> TwoSample:
    """Tied sample on which the mid-rank SHS estimator goes negative"""
    return TwoSample.of([1, 1, 2, 2, 3], [3, 4, 4, 4, 5])


@pytest.fixture
def separated() -> TwoSample:
    return TwoSample.of([1, 2], [3, 4])


@pytest.fixture
def extremal() -> TwoSample:
    """Attains the sharp upper bound theta_hat(1 - theta_hat)/(m - 1)"""
    return TwoSample.of([1, 4], [2, 3])


@pytest.fixture
def examples_dir() -> Path:
    return EXAMPLES_DIR


def groups(min_size: int = 2, max_size: int = 12):
    """Group values mixing heavy ties (small integers) and continuous draws"""
    tied = st.lists(st.integers(min_value=0, max_value=4).map(float), min_size=min_size, max_size=max_size)
    spread = st.lists(
        st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False),
        min_size=min_size,
        max_size=max_size,
    )
    return st.one_of(tied, spread)


@st.composite
def two_samples(draw, min_size: int = 2, max_size: int = 12) -> TwoSample:
    return TwoSample.of(draw(groups(min_size, max_size)), draw(groups(min_size, max_size)))
