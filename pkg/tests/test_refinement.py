import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import as_sets, coarsest_compatible, floor_key
from targetlump import (Partition, TargetProblem, exact_fixpoint, initial_partition, is_compatible,
                        refine_once, restrict_row, run_target_algorithm)
from targetlump.generators import coupon_collector, lifted_chain, random_block_matrix, random_chain


def blocks(part):
    return [b.tolist() for b in part.blocks]


def test_initial_partition_examples():
    prob = TargetProblem(np.eye(4), [3], 0.5)
    assert blocks(initial_partition(prob)) == [[3], [0, 1, 2]]
    assert blocks(initial_partition(TargetProblem(np.eye(2), [0], 0.5))) == [[0], [1]]
    cc = coupon_collector(3)
    assert 2 ** 3 - 1 == cc.n_states == 7
    assert initial_partition(cc).sizes().tolist() == [1, 6]


def test_identical_rows_are_a_fixpoint(identical_rows):
    p0 = initial_partition(identical_rows)
    assert refine_once(identical_rows, p0, 0.5) == p0
    assert refine_once(identical_rows, p0, 0.0) == p0


def test_four_state_exact_split(four_state):
    p0 = initial_partition(four_state)
    p1 = refine_once(four_state, p0, 0.0)
    assert blocks(p1) == [[3], [0], [1, 2]]
    # brute force over every partition of the 4 states agrees on one step of splitting
    assert as_sets(exact_fixpoint(four_state, 0.0)) == coarsest_compatible(four_state.matrix.toarray(), [3])


def test_four_state_cut_split_uses_floor_formula(four_state):
    p0 = initial_partition(four_state)
    rows = [restrict_row(four_state, x, p0) for x in range(4)]
    np.testing.assert_allclose(rows[0], [0.0, 1.0])
    np.testing.assert_allclose(rows[1], [0.5, 0.5])
    assert floor_key(rows[0], 0.5) != floor_key(rows[1], 0.5)
    assert floor_key(rows[1], 0.5) == floor_key(rows[2], 0.5)
    assert refine_once(four_state, p0, 0.5) == refine_once(four_state, p0, 0.0)


def test_refinement_uses_previous_partition():
    # state 1 and 2 agree on {T, rest} but differ once {0} is split off; a single step must not see that
    P = np.array([
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.5, 0.0, 0.0, 0.5],
        [0.5, 0.0, 0.0, 0.0, 0.5],
        [0.0, 0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ])
    prob = TargetProblem(P, [4], 0.5)
    p1 = refine_once(prob, initial_partition(prob), 0.0)
    assert blocks(p1) == [[4], [0], [1, 2], [3]]
    p2 = refine_once(prob, p1, 0.0)
    assert blocks(p2) == [[4], [0], [1], [2], [3]]


def test_target_block_first_even_when_not_lowest():
    prob = random_chain(10, 0.3, 3, seed=4)
    for _, part in run_target_algorithm(prob, [0.5, 0.1, 0]).steps:
        assert blocks(part)[0] == prob.target.tolist()


def test_schedule_validation(four_state):
    with pytest.raises(ValueError):
        run_target_algorithm(four_state, [])
    with pytest.raises(ValueError):
        run_target_algorithm(four_state, [0.1, 0.5])
    with pytest.raises(ValueError):
        run_target_algorithm(four_state, [0.5, 0.0, 0.1])
    with pytest.raises(ValueError):
        run_target_algorithm(four_state, [-0.5])


def test_run_stops_at_fixpoint(identical_rows):
    filt = run_target_algorithm(identical_rows, [0.5])
    assert len(filt) == 2
    assert filt.steps[1][1] == filt.steps[0][1]
    assert filt.converged
    assert math.isinf(filt.steps[0][0])


def test_coupon_counts_grow_and_stay_below_fixpoint():
    prob = coupon_collector(3)
    filt = run_target_algorithm(prob, [0.5, 0.1, 0.05])
    counts = filt.class_counts()
    assert counts == sorted(counts)
    assert counts[-1] <= exact_fixpoint(prob).n_blocks


@pytest.mark.parametrize("seed", range(8))
def test_each_step_refines_the_last(seed):
    prob = random_chain(30 + 10 * seed, 0.1, 1 + seed % 3, seed)
    filt = run_target_algorithm(prob, [0.5, 0.1, 0.05])
    eps = filt.epsilons
    assert all(a >= b for a, b in zip(eps, eps[1:]))
    for a, b in zip(filt.partitions, filt.partitions[1:]):
        assert b.refines(a)


def test_exact_fixpoint_two_states():
    prob = TargetProblem(np.array([[0.5, 0.5], [0.0, 1.0]]), [1], 0.5)
    assert blocks(exact_fixpoint(prob)) == [[1], [0]]


@pytest.mark.parametrize("seed", range(5))
def test_fixpoint_recovers_lifted_blocks(seed):
    bm = random_block_matrix(3, seed)
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, 4, size=3)
    prob, gen = lifted_chain(bm, sizes, seed=seed)
    fp = exact_fixpoint(prob)
    assert fp == gen
    if prob.n_states <= 8:
        assert as_sets(fp) == coarsest_compatible(prob.matrix.toarray(), prob.target, tol=1e-12)


def test_distinct_rows_give_singletons():
    P = np.array([
        [0.0, 0.5, 0.0, 0.5, 0.0],
        [0.0, 0.0, 0.75, 0.25, 0.0],
        [0.0, 0.0, 0.0, 0.5, 0.5],
        [0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ])
    prob = TargetProblem(P, [3], 0.5)
    fp = exact_fixpoint(prob, 0.0)
    assert fp.n_blocks == 5
    assert as_sets(fp) == coarsest_compatible(P, [3])


def test_is_compatible_examples():
    bm = random_block_matrix(3, 11)
    prob, gen = lifted_chain(bm, [2, 3, 2], seed=5)
    assert is_compatible(prob, Partition.singletons(prob.n_states))
    assert is_compatible(prob, gen, 1e-12)
    for a, b in [(1, 2), (0, 1), (0, 2)]:
        labels = gen.block_of.copy()
        labels[labels == b] = a
        merged = Partition.from_labels(labels, prob.target_mask)
        assert not is_compatible(prob, merged, 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 8), st.integers(0, 10 ** 6), st.sampled_from([2, 4, 8]))
def test_fixpoint_is_compatible_and_deterministic(n, seed, res):
    prob = random_chain(n, 0.5, 1, seed, resolution=res)
    fp = exact_fixpoint(prob, 0.0)
    assert is_compatible(prob, fp, 0.0)
    assert np.array_equal(exact_fixpoint(prob, 0.0).block_of, fp.block_of)


def test_threads_do_not_change_results():
    prob = coupon_collector(13, np.random.default_rng(0).dirichlet(np.ones(13)))
    a = run_target_algorithm(prob, [0.5, 0.1], threads=1)
    b = run_target_algorithm(prob, [0.5, 0.1], threads=4)
    assert [p.block_of.tobytes() for p in a.partitions] == [p.block_of.tobytes() for p in b.partitions]
