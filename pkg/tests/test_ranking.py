import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.exceptions import InvalidSampleError
from app.models import TwoSample
from app.ranking import (
    count,
    count_minus,
    count_plus,
    midranks,
    normalized_edf,
    rank_arrays,
    rank_invariant_violations,
    rank_tables,
)
from tests.conftest import two_samples


@pytest.mark.parametrize("x, y, expected", [(1, 2, 1.0), (2, 2, 0.5), (3, 1, 0.0)])
def test_count(x, y, expected):
    assert count(x, y) == expected


@pytest.mark.parametrize("x, y, plus, minus", [(2, 2, 1, 0), (1, 2, 1, 1), (3, 1, 0, 0)])
def test_one_sided_counts(x, y, plus, minus):
    assert count_plus(x, y) == plus
    assert count_minus(x, y) == minus


@given(st.integers(-3, 3), st.integers(-3, 3))
def test_count_is_mean_of_one_sided_counts(x, y):
    assert count(x, y) == (count_plus(x, y) + count_minus(x, y)) / 2


@pytest.mark.parametrize("func", [count, count_plus, count_minus])
@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_counts_reject_non_finite(func, bad):
    with pytest.raises(InvalidSampleError):
        func(bad, 1.0)
    with pytest.raises(InvalidSampleError):
        func(1.0, bad)


def test_midranks_of_tie_pair():
    np.testing.assert_array_equal(midranks([3, 1, 4, 1]), [3, 1.5, 4, 1.5])


def test_placements_with_cross_ties(counterexample):
    tables = rank_tables(counterexample)
    np.testing.assert_array_equal(tables.first.placement, [0, 0, 0, 0, 0.5])
    np.testing.assert_array_equal(tables.second.placement, [4.5, 5, 5, 5, 5])
    np.testing.assert_array_equal(tables.first.cross_ties, [0, 0, 0, 0, 1])


def test_placements_full_separation(separated):
    tables = rank_tables(separated)
    np.testing.assert_array_equal(tables.first.placement, [0, 0])
    np.testing.assert_array_equal(tables.second.placement, [2, 2])


def test_internal_and_overall_ranks(counterexample):
    tables = rank_tables(counterexample)
    np.testing.assert_array_equal(tables.first.internal_mid, [1.5, 1.5, 3.5, 3.5, 5])
    np.testing.assert_array_equal(tables.first.overall_min, [1, 1, 3, 3, 5])
    np.testing.assert_array_equal(tables.first.overall_max, [2, 2, 4, 4, 6])
    np.testing.assert_array_equal(tables.second.overall_mid, [5.5, 8, 8, 8, 10])


@given(two_samples())
def test_rank_table_invariants(sample):
    assert rank_invariant_violations(rank_tables(sample)) == []


@given(two_samples())
def test_placements_match_normalized_edf(sample):
    tables = rank_tables(sample)
    np.testing.assert_allclose(
        tables.second.placement, sample.n1 * normalized_edf(sample.group1, sample.group2), rtol=0, atol=1e-12
    )
    np.testing.assert_allclose(
        tables.first.placement, sample.n2 * normalized_edf(sample.group2, sample.group1), rtol=0, atol=1e-12
    )


@given(two_samples())
def test_mean_placement_matches_rank_means(sample):
    tables = rank_tables(sample)
    from_placements = tables.second.placement.mean() / sample.n1
    from_ranks = (tables.second.overall_mid.mean() - tables.first.overall_mid.mean()) / sample.N + 0.5
    assert from_placements == pytest.approx(from_ranks, abs=1e-12)


@given(two_samples(), st.randoms(use_true_random=False))
@settings(max_examples=50)
def test_permutation_within_group(sample, random):
    order = list(range(sample.n1))
    random.shuffle(order)
    shuffled = TwoSample.of([sample.group1[i] for i in order], sample.group2)

    before, after = rank_tables(sample), rank_tables(shuffled)
    np.testing.assert_array_equal(after.first.placement, before.first.placement[order])
    np.testing.assert_array_equal(np.sort(after.second.placement), np.sort(before.second.placement))
    assert after.first.placement.sum() == before.first.placement.sum()


def test_batch_ranking_matches_rows():
    rng = np.random.default_rng(3)
    x1 = rng.integers(0, 4, size=(20, 6)).astype(float)
    x2 = rng.integers(0, 4, size=(20, 4)).astype(float)
    batch = rank_arrays(x1, x2)
    for row in range(20):
        single = rank_tables(TwoSample.of(x1[row], x2[row]))
        np.testing.assert_array_equal(batch.first.placement[row], single.first.placement)
        np.testing.assert_array_equal(batch.second.overall_mid[row], single.second.overall_mid)
    assert rank_invariant_violations(batch) == []
