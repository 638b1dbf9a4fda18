"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

import os
import time

import numpy as np
import pytest

from acceptance_log import verdict
from oracles import as_sets, coarsest_compatible, coupon_paths_hit, dense_profile, qtq_aggregate
from targetlump import (EpsilonCut, Filtration, Partition, class_key, coupon_collector,
                        distance_d, exact_fixpoint, hitting_profile, lifted_chain, random_block_matrix,
                        random_chain, run_target_algorithm)
from targetlump.aggregation import aggregate, geometric_block_measure, uniform_measure
from targetlump.cli import main
from targetlump.refinement import initial_partition

TAIL_TOL = 1e-6


def small_rational_chain(i):
    rng = np.random.default_rng(1000 + i)
    n = int(rng.integers(3, 9))
    return random_chain(n, density=float(rng.uniform(0.2, 0.7)), target_size=int(rng.integers(1, 3)),
                        seed=1000 + i, resolution=int(rng.choice([2, 4, 8])))


def test_criterion_1_cut_soundness():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    equal = violations = 0
    for i in range(10_000):
        length = int(rng.integers(1, 65))
        eps = float(10 ** rng.uniform(-3, 0))
        p = rng.dirichlet(np.ones(length))
        if i % 2:
            q = rng.dirichlet(np.ones(length))
        else:
            # draw q inside p's cells so that key agreement is common
            w = eps * 2.0 ** -(np.arange(length) + 1)
            cell = np.floor(p / w)
            q = (cell + rng.uniform(0, 1, length)) * w
        cut = EpsilonCut(eps)
        if class_key(cut, p) == class_key(cut, q):
            equal += 1
            violations += np.abs(p - q).sum() >= eps
    elapsed = time.perf_counter() - start
    verdict(1, violations == 0 and equal > 1000 and elapsed < 5,
            f"{violations} violations among {equal} equal-key pairs, {elapsed:.2f}s")


def test_criterion_2_fixpoint_matches_enumeration():
    start = time.perf_counter()
    mismatches = 0
    for i in range(200):
        prob = small_rational_chain(i)
        got = as_sets(exact_fixpoint(prob, delta=0.0))
        mismatches += got != coarsest_compatible(prob.matrix.toarray(), prob.target)
    elapsed = time.perf_counter() - start
    verdict(2, mismatches == 0 and elapsed < 60, f"{mismatches}/200 mismatches, {elapsed:.2f}s")


def test_criterion_3_schedule_independence():
    mismatches = 0
    for i in range(200):
        prob = small_rational_chain(i)
        a = run_target_algorithm(prob, [0.5, 0.1, 0], delta=0.0)
        b = run_target_algorithm(prob, [0.3, 0.2, 0.05, 0], delta=0.0)
        mismatches += not (a.converged and b.converged and a.final == b.final)
    verdict(3, mismatches == 0, f"{mismatches}/200 mismatches")


def test_criterion_4_error_bound_coupon_8():
    start = time.perf_counter()
    prob = coupon_collector(8, beta=0.5)
    schedule = (0.5, 0.1, 0.05, 0.01)
    filt = run_target_algorithm(prob, schedule)
    mu = uniform_measure(prob)
    beta = prob.beta
    worst = 0.0
    ok = len(filt.steps) == len(schedule) + 1
    for eps, part in filt.steps[1:]:
        value = distance_d(prob, aggregate(prob, part, mu), part, TAIL_TOL).value
        bound = eps * beta / (1 - beta) ** 2 + TAIL_TOL
        ok &= value <= bound
        worst = max(worst, value / bound)
    elapsed = time.perf_counter() - start
    verdict(4, ok and elapsed < 30, f"worst value/bound {worst:.3f}, {elapsed:.2f}s")


def test_criterion_5_lifted_chains_reproduced():
    rng = np.random.default_rng(5)
    worst_entry = worst_d = 0.0
    for i in range(100):
        k = int(rng.integers(2, 11))
        sizes = rng.integers(1, 200 // k + 1, size=k)
        bm = random_block_matrix(k, seed=i)
        prob, gen = lifted_chain(bm, sizes, seed=i)
        filt = Filtration(steps=[(np.inf, initial_partition(prob)), (0.0, gen)])
        for mu in (uniform_measure(prob), geometric_block_measure(filt)):
            agg = aggregate(prob, gen, mu)
            worst_entry = max(worst_entry, float(np.abs(agg.dense() - bm).max()))
            worst_d = max(worst_d, distance_d(prob, agg, gen, TAIL_TOL).value)
    verdict(5, worst_entry <= 1e-12 and worst_d <= 1e-9 + TAIL_TOL,
            f"max entry error {worst_entry:.1e}, max distance {worst_d:.1e}")


def test_criterion_6_matches_matrix_identity():
    rng = np.random.default_rng(6)
    worst = 0.0
    for i in range(100):
        prob = random_chain(6, density=0.5, target_size=int(rng.integers(1, 3)), seed=i)
        labels = rng.integers(0, int(rng.integers(1, 7)), size=6)
        part = Partition.from_labels(labels, target_mask=prob.target_mask)
        agg = aggregate(prob, part, uniform_measure(prob))
        ref = qtq_aggregate(prob.matrix.toarray(), part.block_of, part.n_blocks)
        worst = max(worst, float(np.abs(agg.dense() - ref).max()))
    verdict(6, worst <= 1e-12, f"max entry error {worst:.1e}")


def test_criterion_7_hitting_probabilities():
    p3 = coupon_collector(3)
    prof = hitting_profile(p3, 2).values
    singles = [(1 << i) - 1 for i in range(3)]
    err_29 = max(abs(prof[1, s] - 2 / 9) for s in singles)
    err_paths = max(abs(prof[1, (1 << i) - 1] - float(coupon_paths_hit(3, {i}, 2))) for i in range(3))
    p4 = coupon_collector(4)
    dense = p4.matrix.toarray()
    err_4 = float(np.abs(hitting_profile(p4, 32).values - dense_profile(dense, p4.target, 32)).max())
    verdict(7, err_29 <= 1e-15 and err_paths <= 1e-15 and err_4 <= 1e-12,
            f"|P^2 - 2/9| {err_29:.1e}, n=4 profile error {err_4:.1e}")


def _coupon_counts(n, p=None):
    prob = coupon_collector(n, p)
    filt = run_target_algorithm(prob, (0.5, 0.1, 0.05))
    # forming the aggregated chain is part of the reproduced pipeline
    aggregate(prob, filt.final, uniform_measure(prob))
    return prob.n_states, filt.class_counts()


def _linear_draws(n):
    w = np.arange(1, n + 1, dtype=np.float64)
    return w / w.sum()


def _shape_ok(n_states, counts):
    return all(a <= b for a, b in zip(counts, counts[1:])) and counts[1] >= 3 and counts[-1] <= n_states // 10


def test_criterion_8_coupon_12_filtration_shape():
    # uniform draws lump exactly by subset size; linear draws show real growth
    n_states, uniform = _coupon_counts(12)
    _, linear = _coupon_counts(12, _linear_draws(12))
    ok = _shape_ok(n_states, uniform) and _shape_ok(n_states, linear)
    verdict(8, ok, f"class counts per step: uniform draws {uniform}, linear draws {linear}, "
                   f"{n_states} states")


@pytest.mark.slow
@pytest.mark.skipif(os.environ.get("TL_SLOW") != "1", reason="set TL_SLOW=1 for the n=18 run")
def test_criterion_8_coupon_18_optional():
    start = time.perf_counter()
    n_states, uniform = _coupon_counts(18)
    _, linear = _coupon_counts(18, _linear_draws(18))
    elapsed = time.perf_counter() - start
    assert _shape_ok(n_states, uniform) and _shape_ok(n_states, linear)
    assert elapsed < 600, f"{elapsed:.0f}s"
    print(f"n=18: uniform {uniform}, linear {linear}, {elapsed:.1f}s")


def _cli_run(root, threads):
    root.mkdir()
    files = []

    def run(*argv):
        assert main([str(a) for a in argv]) == 0, argv

    for name, gen in [("lift", ["lifted", "--sizes", "3,5,2,7", "--seed", 11]),
                      ("rand", ["random", "--n-states", 300, "--density", 0.05, "--seed", 11]),
                      ("coup", ["coupon", "--n", 10])]:
        chain = root / f"{name}.tpchain"
        run("generate", *gen, "--out", chain, "--threads", threads)
        files += [chain, root / f"{name}.tpchain.meta.json"]
        for mode, sched in [("cut", "0.5,0.1,0.05"), ("exact", None)]:
            filt = root / f"{name}.{mode}.json"
            args = ["refine", chain, "--mode", mode, "--out", filt, "--threads", threads]
            run(*(args + (["--schedule", sched] if sched else [])))
            files.append(filt)
            for measure in ("uniform", "geometric"):
                agg = root / f"{name}.{mode}.{measure}.tpchain"
                run("aggregate", chain, filt, "--measure", measure, "--out", agg, "--threads", threads)
                bmap = root / f"{name}.{mode}.{measure}.tpchain.blockmap.json"
                rep = root / f"{name}.{mode}.{measure}.report.json"
                run("distance", chain, agg, bmap, "--out", rep, "--threads", threads)
                files += [agg, bmap, rep]
    return [(f.name, f.read_bytes()) for f in files]


def test_criterion_9_deterministic_outputs(tmp_path):
    runs = [_cli_run(tmp_path / f"run{i}-t{t}", t) for i, t in enumerate((1, 4, 1, 0))]
    same = all(r == runs[0] for r in runs[1:])
    verdict(9, same, f"{len(runs[0])} output files compared across --threads 1, 4, 1, auto")
