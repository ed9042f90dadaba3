"""Dominance, frontier, and hypervolume behavior, checked against oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paretoprobe import pareto

import oracles


def P(c, a, probe_id=0):
    return pareto.ProbePoint(complexity=c, accuracy=a, probe_id=probe_id)


def test_dominates_definition():
    assert pareto.dominates(P(1, 0.9), P(2, 0.8))
    assert not pareto.dominates(P(1, 0.9), P(1, 0.9))  # no strict improvement
    assert not pareto.dominates(P(1, 0.8), P(2, 0.9))  # incomparable
    assert pareto.dominates(P(1, 0.9), P(1, 0.8))
    assert pareto.dominates(P(1, 0.9), P(2, 0.9))


def test_point_validation():
    with pytest.raises(ValueError, match="non-negative"):
        P(-0.1, 0.5)
    with pytest.raises(ValueError, match="accuracy"):
        P(1.0, 1.5)


def test_frontier_example():
    frontier = pareto.pareto_frontier([P(1, 0.9), P(2, 0.95), P(3, 0.8)])
    assert [(p.complexity, p.accuracy) for p in frontier] == [(1, 0.9), (2, 0.95)]


def test_frontier_single_point():
    frontier = pareto.pareto_frontier([P(4, 0.5)])
    assert len(frontier) == 1


def test_frontier_empty():
    assert len(pareto.pareto_frontier([])) == 0


def test_frontier_collapses_duplicates_to_lowest_probe_id():
    frontier = pareto.pareto_frontier([P(1, 0.9, probe_id=7), P(1, 0.9, probe_id=3)])
    assert len(frontier) == 1
    assert frontier.points[0].probe_id == 3


def test_frontier_equal_complexity_keeps_max_accuracy():
    frontier = pareto.pareto_frontier([P(2, 0.7), P(2, 0.9), P(2, 0.8)])
    assert [(p.complexity, p.accuracy) for p in frontier] == [(2, 0.9)]


def _random_points(rng, count):
    return [
        P(float(rng.uniform(0, 10)), float(rng.uniform(0, 1)), probe_id=i)
        for i in range(count)
    ]


def test_frontier_matches_brute_force_oracle_on_random_sets():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        points = _random_points(rng, 120)
        got = list(pareto.pareto_frontier(points))
        want = oracles.pareto_frontier_oracle(points)
        assert got == want


def test_frontier_invariants_hold_on_random_sets():
    rng = np.random.default_rng(99)
    for _ in range(30):
        points = _random_points(rng, 80)
        frontier = list(pareto.pareto_frontier(points))
        complexities = [p.complexity for p in frontier]
        accuracies = [p.accuracy for p in frontier]
        assert complexities == sorted(complexities)
        assert all(b > a for a, b in zip(accuracies, accuracies[1:]))
        for p in frontier:
            assert not any(pareto.dominates(q, p) for q in points)


def test_hypervolume_single_rectangle():
    result = pareto.hypervolume([P(0.5, 0.8)], c_max=1.0)
    assert result.value == pytest.approx(0.40, abs=1e-15)
    assert result.point_count == 1
    assert result.excluded_count == 0


def test_hypervolume_two_step_staircase():
    result = pareto.hypervolume([P(0.2, 0.5), P(0.6, 0.9)], c_max=1.0)
    assert result.value == pytest.approx(0.56, abs=1e-15)


def test_hypervolume_two_step_confirmed_by_riemann_grid():
    points = [P(0.2, 0.5), P(0.6, 0.9)]
    grid = oracles.hypervolume_riemann(points, c_max=1.0, resolution=1_000_000)
    assert abs(pareto.hypervolume(points, 1.0).value - grid) <= 2e-3


def test_hypervolume_full_box():
    assert pareto.hypervolume([P(0.0, 1.0)], c_max=1.0).value == 1.0


def test_hypervolume_excludes_points_beyond_cmax():
    result = pareto.hypervolume([P(0.5, 0.8), P(9.0, 0.99)], c_max=1.0)
    assert result.value == pytest.approx(0.40, abs=1e-15)
    assert result.excluded_count == 1
    assert result.point_count == 1


def test_hypervolume_empty_and_all_excluded():
    assert pareto.hypervolume([], c_max=5.0).value == 0.0
    result = pareto.hypervolume([P(10, 0.5)], c_max=1.0)
    assert result.value == 0.0
    assert result.excluded_count == 1


def test_hypervolume_requires_positive_cmax():
    with pytest.raises(ValueError, match="c_max"):
        pareto.hypervolume([P(1, 0.5)], c_max=0.0)


point_lists = st.lists(
    st.tuples(
        st.floats(min_value=0.0, max_value=2.0, allow_nan=False),
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    ),
    min_size=0,
    max_size=40,
)


@settings(max_examples=200, deadline=None)
@given(point_lists, st.floats(min_value=0.1, max_value=3.0, allow_nan=False))
def test_hypervolume_equals_frontier_hypervolume(coords, c_max):
    points = [P(c, a, probe_id=i) for i, (c, a) in enumerate(coords)]
    full = pareto.hypervolume(points, c_max).value
    frontier_only = pareto.hypervolume(list(pareto.pareto_frontier(points)), c_max).value
    assert full == pytest.approx(frontier_only, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    point_lists,
    st.tuples(
        st.floats(min_value=0.0, max_value=2.0, allow_nan=False),
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    ),
)
def test_hypervolume_monotone_under_addition(coords, extra):
    points = [P(c, a, probe_id=i) for i, (c, a) in enumerate(coords)]
    before = pareto.hypervolume(points, 1.5).value
    after = pareto.hypervolume(points + [P(extra[0], extra[1])], 1.5).value
    assert after >= before - 1e-12


@settings(max_examples=100, deadline=None)
@given(point_lists, st.integers(min_value=0, max_value=10_000))
def test_hypervolume_permutation_invariant(coords, seed):
    points = [P(c, a, probe_id=i) for i, (c, a) in enumerate(coords)]
    shuffled = list(np.random.default_rng(seed).permutation(len(points)))
    permuted = [points[i] for i in shuffled]
    assert pareto.hypervolume(points, 1.5).value == pytest.approx(
        pareto.hypervolume(permuted, 1.5).value, abs=0
    )


@settings(max_examples=100, deadline=None)
@given(point_lists, st.floats(min_value=0.01, max_value=100.0, allow_nan=False))
def test_hypervolume_scale_invariant(coords, factor):
    points = [P(c, a, probe_id=i) for i, (c, a) in enumerate(coords)]
    scaled = [
        pareto.ProbePoint(complexity=p.complexity * factor, accuracy=p.accuracy,
                          probe_id=p.probe_id)
        for p in points
    ]
    base = pareto.hypervolume(points, 1.5).value
    assert pareto.hypervolume(scaled, 1.5 * factor).value == pytest.approx(base, abs=1e-12)
