"""Solution algebra, metered evaluation, comparison, and random streams."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dacopt import (
    BudgetExhaustedError,
    ConvergenceTrace,
    Direction,
    EvalCounter,
    FullSolution,
    Grouping,
    IndexOutOfRangeError,
    NonFiniteValueError,
    OverlapOrGapError,
    PartialSolution,
    ProblemSpec,
    RngStream,
    better,
    compose,
    compose_all,
    counted_eval,
    project,
    sphere,
)
from dacopt.core import eval_raw, strictly_better


# -- random streams -----------------------------------------------------------


def test_stream_same_address_same_draws():
    a = RngStream.from_parts(42, "search", 3)
    b = RngStream.from_parts(42, "search", 3)
    assert np.array_equal(a.uniform(0, 1, 16), b.uniform(0, 1, 16))
    assert np.array_equal(a.standard_normal(16), b.standard_normal(16))
    assert np.array_equal(a.permutation(10), b.permutation(10))


def test_stream_addresses_are_independent():
    base = RngStream.from_parts(42, "search", 0).uniform(0, 1, 8)
    assert not np.array_equal(base, RngStream.from_parts(43, "search", 0).uniform(0, 1, 8))
    assert not np.array_equal(base, RngStream.from_parts(42, "run", 0).uniform(0, 1, 8))
    assert not np.array_equal(base, RngStream.from_parts(42, "search", 1).uniform(0, 1, 8))


# -- problem spec ---------------------------------------------------------------


def test_box_spec_bounds_and_sampling():
    spec = ProblemSpec.box(5, -2.0, 3.0)
    assert spec.dimension == 5
    assert np.array_equal(spec.lower, np.full(5, -2.0))
    assert np.array_equal(spec.upper, np.full(5, 3.0))
    x = spec.sample_uniform(RngStream.from_parts(0))
    assert x.shape == (5,)
    assert ((x >= spec.lower) & (x <= spec.upper)).all()
    clipped = spec.clip(np.array([-10.0, 0.0, 10.0, 2.0, -2.0]))
    assert np.array_equal(clipped, [-2.0, 0.0, 3.0, 2.0, -2.0])


def test_spec_rejects_bad_bounds():
    with pytest.raises(ValueError):
        ProblemSpec.box(0)
    with pytest.raises(ValueError):
        ProblemSpec(2, np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        ProblemSpec(1, np.array([-np.inf]), np.array([0.0]))


def test_spec_bounds_are_immutable():
    spec = ProblemSpec.box(2)
    with pytest.raises(ValueError):
        spec.lower[0] = 5.0


# -- solutions ------------------------------------------------------------------


def test_full_solution_values_are_readonly():
    x = FullSolution(np.array([1.0, 2.0]))
    assert x.dimension == 2
    assert x.cached_value is None
    with pytest.raises(ValueError):
        x.values[0] = 9.0


def test_partial_solution_validation():
    p = PartialSolution(np.array([2, 0]), np.array([7.0, 5.0]))
    assert len(p) == 2
    with pytest.raises(ValueError):
        PartialSolution(np.array([0, 0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        PartialSolution(np.array([0]), np.array([1.0, 2.0]))
    with pytest.raises(IndexOutOfRangeError):
        PartialSolution(np.array([-1]), np.array([1.0]))


def test_grouping_partition_checks():
    g = Grouping(4, (np.array([2, 0]), np.array([1, 3])))
    assert g.group_count == 2
    assert np.array_equal(g.groups[0], [0, 2])  # stored sorted
    assert np.array_equal(g.complement(0), [1, 3])
    with pytest.raises(OverlapOrGapError):
        Grouping(4, (np.array([0, 1]), np.array([1, 2, 3])))
    with pytest.raises(OverlapOrGapError):
        Grouping(4, (np.array([0]), np.array([1, 2])))
    with pytest.raises(IndexOutOfRangeError):
        Grouping(2, (np.array([0]), np.array([4])))


# -- projection and composition ---------------------------------------------------


def test_project_examples():
    x = FullSolution(np.array([5.0, 7.0, 9.0]))
    assert np.array_equal(project(x, [0, 2]).values, [5.0, 9.0])
    assert np.array_equal(project(x, [1]).values, [7.0])
    with pytest.raises(IndexOutOfRangeError):
        project(x, [3])


def test_compose_places_by_index_not_argument_order():
    a = PartialSolution(np.array([0]), np.array([3.0]))
    b = PartialSolution(np.array([1]), np.array([4.0]))
    assert np.array_equal(compose(a, b).values, [3.0, 4.0])
    c = PartialSolution(np.array([1]), np.array([7.0]))
    d = PartialSolution(np.array([0]), np.array([5.0]))
    assert np.array_equal(compose(c, d).values, [5.0, 7.0])


def test_compose_rejects_overlap_and_gap():
    a = PartialSolution(np.array([0, 1]), np.array([1.0, 2.0]))
    b = PartialSolution(np.array([1, 2]), np.array([3.0, 4.0]))
    with pytest.raises(OverlapOrGapError):
        compose(a, b)
    lone = PartialSolution(np.array([0]), np.array([1.0]))
    far = PartialSolution(np.array([2]), np.array([2.0]))
    with pytest.raises(OverlapOrGapError):
        compose(lone, far)


def test_compose_round_trip_example():
    x = FullSolution(np.array([5.0, 7.0, 9.0]))
    back = compose(project(x, [0, 2]), project(x, [1]))
    assert np.array_equal(back.values, x.values)
    assert back.cached_value is None


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64),
                min_size=1, max_size=24),
       st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_partition_round_trip_is_bit_exact(values, seed):
    x = FullSolution(np.array(values))
    rng = np.random.default_rng(seed)
    cut = int(rng.integers(0, x.dimension + 1))
    perm = rng.permutation(x.dimension)
    left, right = np.sort(perm[:cut]), np.sort(perm[cut:])
    back = compose_all([project(x, left), project(x, right)])
    assert np.array_equal(back.values, x.values)


# -- metered evaluation ----------------------------------------------------------


def test_counted_eval_counts_and_caches():
    c = EvalCounter(budget=10)
    x = FullSolution(np.zeros(3))
    assert counted_eval(sphere, x, c) == 0.0
    assert c.consumed == 1
    assert x.cached_value == 0.0
    assert counted_eval(sphere, x, c) == 0.0  # cache hit
    assert c.consumed == 1


def test_counter_exhaustion():
    c = EvalCounter(budget=1)
    counted_eval(sphere, FullSolution(np.ones(2)), c)
    with pytest.raises(BudgetExhaustedError):
        counted_eval(sphere, FullSolution(np.zeros(2)), c)
    assert c.consumed == 1
    assert c.remaining == 0


def test_counter_validation():
    with pytest.raises(ValueError):
        EvalCounter(budget=-1)
    with pytest.raises(ValueError):
        EvalCounter(budget=2, consumed=3)


def test_eval_raw_rejects_nan():
    c = EvalCounter(budget=5)
    with pytest.raises(NonFiniteValueError):
        eval_raw(lambda v: float("nan"), np.zeros(2), c)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=30))
def test_counter_increments_by_exactly_one(fresh):
    c = EvalCounter(budget=1000)
    seen = [c.consumed]
    for k in range(fresh):
        eval_raw(sphere, np.full(2, float(k)), c)
        seen.append(c.consumed)
    assert seen == list(range(fresh + 1))


# -- comparison -------------------------------------------------------------------


def test_better_examples():
    assert better(3.0, 5.0, Direction.MINIMIZE)
    assert not better(3.0, 5.0, Direction.MAXIMIZE)
    assert better(4.0, 4.0, Direction.MINIMIZE)  # challenger wins ties
    assert better(4.0, 4.0, Direction.MAXIMIZE)
    assert not strictly_better(4.0, 4.0, Direction.MINIMIZE)
    assert strictly_better(3.0, 4.0, Direction.MINIMIZE)


def test_better_rejects_nan():
    with pytest.raises(NonFiniteValueError):
        better(float("nan"), 1.0)
    with pytest.raises(NonFiniteValueError):
        strictly_better(1.0, float("nan"))


# -- traces -----------------------------------------------------------------------


def test_trace_accumulates():
    t = ConvergenceTrace()
    t.record(1, 50.0)
    t.record(41, 12.5)
    assert len(t) == 2
    assert t.final_fe == 41
    assert t.final_value == 12.5
    fes, vals = t.as_arrays()
    assert np.array_equal(fes, [1, 41])
    assert np.array_equal(vals, [50.0, 12.5])
    assert fes.dtype == np.int64


def test_cached_value_matches_reevaluation():
    c = EvalCounter(budget=4)
    x = FullSolution(np.array([1.5, -0.5, 2.0]))
    v = counted_eval(sphere, x, c)
    assert sphere(x.values) == v == x.cached_value


def test_optimum_of_sphere_is_zero_vector():
    assert sphere(np.zeros(4)) == 0.0
    assert math.isclose(sphere(np.array([1.0, -2.0])), 5.0)
