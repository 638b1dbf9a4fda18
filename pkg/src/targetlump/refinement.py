"""Filtration construction by row-splitting, and the exact refinement fixpoint."""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence

import numpy as np

from .chain import Filtration, Partition, TargetProblem, restrict_rows
from .equivalence import cut_keys, grid_keys

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 1e-12


def resolve_threads(threads=None) -> int:
    """Worker count: explicit value, else ``TL_THREADS``, else 1. Zero means auto."""
    if threads is None:
        threads = int(os.environ.get("TL_THREADS", "1") or 1)
    threads = int(threads)
    if threads < 0:
        raise ValueError("threads must be >= 0")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def initial_partition(problem: TargetProblem) -> Partition:
    """The two-block partition ``[T, X \\ T]``."""
    problem.check()
    mask = problem.target_mask
    return Partition.from_labels(mask.astype(np.int64) * -1, target_mask=mask)


def _row_signatures(indptr, indices, keys, old_block, lo, hi) -> List[bytes]:
    sigs = []
    nz = keys != 0
    for x in range(lo, hi):
        a, b = indptr[x], indptr[x + 1]
        m = nz[a:b]
        sigs.append(old_block[x:x + 1].tobytes() + indices[a:b][m].tobytes() + keys[a:b][m].tobytes())
    return sigs


def refine_once(problem: TargetProblem, partition: Partition, epsilon: float,
                delta: float = DEFAULT_DELTA, threads=1) -> Partition:
    """Split every block by the class keys of rows restricted to ``partition``.

    ``epsilon > 0`` uses the epsilon-cut; ``epsilon == 0`` uses exact grid
    keys of width ``delta``. The restricted rows are always taken over the
    input partition, never a partially split one.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    r = restrict_rows(problem, partition)
    indptr = r.indptr.astype(np.int64)
    indices = r.indices.astype(np.int64)
    n = problem.n_states
    workers = min(resolve_threads(threads), max(1, n // 4096))
    bounds = np.linspace(0, n, workers + 1).astype(np.int64)

    def chunk(i):
        lo, hi = int(bounds[i]), int(bounds[i + 1])
        a, b = indptr[lo], indptr[hi]
        if epsilon > 0:
            keys = cut_keys(r.data[a:b], indices[a:b], epsilon)
        else:
            keys = grid_keys(r.data[a:b], delta)
        return _row_signatures(indptr - a, indices[a:], keys, partition.block_of, lo, hi)

    if workers == 1:
        parts = [chunk(0)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(chunk, range(workers)))
    labels = np.empty(n, dtype=np.int64)
    seen = {}
    x = 0
    for sigs in parts:
        for s in sigs:
            labels[x] = seen.setdefault(s, len(seen))
            x += 1
    return Partition.from_labels(labels, target_mask=problem.target_mask)


def _check_schedule(schedule: Sequence[float]) -> List[float]:
    schedule = [float(e) for e in schedule]
    if not schedule:
        raise ValueError("schedule is empty")
    for e in schedule:
        if not math.isfinite(e) or e < 0:
            raise ValueError(f"schedule entry {e!r} must be finite and >= 0")
    for a, b in zip(schedule, schedule[1:]):
        if b > a:
            raise ValueError(f"schedule must be non-increasing ({a} then {b})")
    if 0.0 in schedule[:-1]:
        raise ValueError("0 is only allowed as the final schedule entry")
    return schedule


def run_target_algorithm(problem: TargetProblem, schedule: Sequence[float],
                         delta: float = DEFAULT_DELTA, threads=1) -> Filtration:
    """Build the filtration for a non-increasing epsilon schedule.

    A trailing ``0`` keeps refining exactly until the partition stabilizes;
    each such round is recorded as a step with ``epsilon = 0``. The run
    stops early, with ``converged`` set, as soon as the current partition is
    an exact fixpoint.
    """
    schedule = _check_schedule(schedule)
    part = initial_partition(problem)
    filt = Filtration(steps=[(math.inf, part)])
    for eps in schedule:
        new = refine_once(problem, part, eps, delta, threads)
        filt.steps.append((eps, new))
        logger.debug("epsilon=%g blocks=%d", eps, new.n_blocks)
        if new == part and (eps == 0 or refine_once(problem, new, 0.0, delta, threads) == new):
            filt.converged = True
            return filt
        part = new
    if schedule[-1] == 0:
        while True:
            new = refine_once(problem, part, 0.0, delta, threads)
            filt.steps.append((0.0, new))
            if new == part:
                filt.converged = True
                break
            part = new
    return filt


def exact_fixpoint(problem: TargetProblem, delta: float = DEFAULT_DELTA, threads=1) -> Partition:
    """Coarsest partition refining ``{T, X\\T}`` whose blocks have equal restricted rows."""
    part = initial_partition(problem)
    for _ in range(problem.n_states + 1):
        new = refine_once(problem, part, 0.0, delta, threads)
        if new == part:
            return new
        part = new
    raise RuntimeError("refinement did not stabilize")  # unreachable: block count is bounded by N


def is_compatible(problem: TargetProblem, partition: Partition, delta: float = DEFAULT_DELTA) -> bool:
    """True when ``T`` is a union of blocks and rows agree within ``delta`` inside each block."""
    mask = problem.target_mask
    r = restrict_rows(problem, partition)
    if partition.n_blocks <= 4096:
        r = r.toarray()
    for b in partition.blocks:
        if mask[b].any() and not mask[b].all():
            return False
        if b.size < 2:
            continue
        rows = r[b] if isinstance(r, np.ndarray) else r[b].toarray()
        if np.max(rows.max(axis=0) - rows.min(axis=0)) > delta:
            return False
    return True
