"""Block-level chains built as measure-weighted averages of member rows."""

from typing import Tuple

import numpy as np
import scipy.sparse as sp

from .chain import ROW_SUM_TOL, Filtration, Partition, StateMeasure, TargetProblem, restrict_rows

DENSE_LIMIT = 4096


class AggregatedTargetProblem:
    """Block-level target problem.

    Parameters
    ----------
    matrix : ndarray or sparse matrix, shape (n_blocks, n_blocks)
    target_blocks : sequence of int
        Blocks making up the target. Partitions from the refinement engine
        always put these first, so this is ``(0,)`` whenever ``T`` stays whole.
    beta : float
    """

    def __init__(self, matrix, target_blocks, beta: float):
        if sp.issparse(matrix):
            matrix = sp.csr_matrix(matrix)
            matrix.sort_indices()
        else:
            matrix = np.asarray(matrix, dtype=np.float64)
        n = matrix.shape[0]
        if matrix.shape != (n, n):
            raise ValueError("aggregated matrix must be square")
        self.matrix = matrix
        self.target_blocks = tuple(int(b) for b in target_blocks)
        if not self.target_blocks or min(self.target_blocks) < 0 or max(self.target_blocks) >= n:
            raise ValueError("invalid target blocks")
        self.beta = float(beta)
        sums = np.asarray(matrix.sum(axis=1)).ravel()
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            x = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"aggregated row {x} sums to {sums[x]:.17g}")

    @property
    def n_blocks(self) -> int:
        return self.matrix.shape[0]

    @property
    def target_block(self) -> int:
        return self.target_blocks[0]

    @property
    def target_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_blocks, dtype=bool)
        mask[list(self.target_blocks)] = True
        return mask

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if sp.issparse(self.matrix) else self.matrix

    def as_problem(self) -> TargetProblem:
        """The block chain viewed as an ordinary target problem."""
        return TargetProblem(self.matrix, self.target_blocks, self.beta)


def uniform_measure(problem: TargetProblem) -> StateMeasure:
    n = problem.n_states
    return StateMeasure(np.full(n, 1.0 / n))


def _split_geometric(parent_mass: float, k: int) -> np.ndarray:
    # child c < k-1 gets 2^-(c+1), the last child the remainder 2^-(k-1)
    exps = np.arange(1, k + 1, dtype=np.int64)
    exps[-1] = k - 1
    return np.ldexp(np.full(k, parent_mass), -exps)


def geometric_block_measure(filtration: Filtration) -> StateMeasure:
    """Strictly positive measure mirroring a tree of geometric splits.

    Every time a block splits into ``k`` children (in block order), child
    ``c < k-1`` receives ``2**-(c+1)`` of the parent's mass and the last
    child the remainder ``2**-(k-1)``. The initial partition is treated as
    a split of the whole space, and each final block hands its mass to its
    member states in index order by the same rule.

    Raises
    ------
    ValueError
        If some weight underflows to zero, which happens once a block has
        more than about a thousand children or members.
    """
    if len(filtration) == 0:
        raise ValueError("empty filtration")
    parts = filtration.partitions
    mass = _split_geometric(1.0, parts[0].n_blocks)
    for coarse, fine in zip(parts, parts[1:]):
        parent = lift_partition(coarse, fine)
        new_mass = np.empty(fine.n_blocks)
        for i in range(coarse.n_blocks):
            kids = np.flatnonzero(parent == i)
            new_mass[kids] = _split_geometric(mass[i], kids.size)
        mass = new_mass
    final = parts[-1]
    weights = np.empty(final.n_states)
    for i, b in enumerate(final.blocks):
        weights[b] = _split_geometric(mass[i], b.size)
    if not np.all(weights > 0):
        raise ValueError("geometric measure underflows to zero for blocks this large; use uniform")
    return StateMeasure(weights / weights.sum())


def _segment_sums(keys: np.ndarray, values: np.ndarray, n_keys: int) -> np.ndarray:
    """Per-key sums using pairwise addition inside each segment.

    Rounding error grows with the log of the segment length instead of the
    length itself, which matters for blocks with ~10^5 members. Terms are
    combined in ascending input order, so the result is deterministic.
    """
    order = np.argsort(keys, kind="stable")
    k = np.asarray(keys, dtype=np.int64)[order]
    v = np.asarray(values, dtype=np.float64)[order]
    while k.size > 1:
        same_next = k[1:] == k[:-1]
        if not same_next.any():
            break
        idx = np.arange(k.size)
        seg_start = np.maximum.accumulate(np.where(np.r_[True, ~same_next], idx, 0))
        lead = (idx - seg_start) % 2 == 0
        partner = np.r_[same_next, False] & lead
        nxt = np.r_[v[1:], 0.0]
        v = np.where(partner, v + nxt, v)[lead]
        k = k[lead]
    out = np.zeros(n_keys)
    out[k] = v
    return out


def block_mass(partition: Partition, mu: StateMeasure) -> np.ndarray:
    return _segment_sums(partition.block_of, mu.weights, partition.n_blocks)


def aggregate(problem: TargetProblem, partition: Partition, mu: StateMeasure) -> AggregatedTargetProblem:
    r"""Aggregated chain over ``partition`` weighted by ``mu``.

    Entry ``(i, j)`` is the ``mu``-weighted mean over states ``x`` in block
    ``i`` of ``P(x, block j)``. With uniform ``mu`` this is
    :math:`(Q^T Q)^{-1} Q^T P Q` for the membership matrix ``Q``.
    """
    if mu.n_states != problem.n_states:
        raise ValueError("measure and problem disagree on the number of states")
    r = restrict_rows(problem, partition).tocoo()
    k = partition.n_blocks
    masses = block_mass(partition, mu)
    assert np.all(masses > 0), "zero-mass block"
    flat = partition.block_of[r.row].astype(np.int64) * k + r.col
    weighted = mu.weights[r.row] * r.data
    if k <= DENSE_LIMIT:
        agg = _segment_sums(flat, weighted, k * k).reshape(k, k) / masses[:, None]
    else:
        keys, slot = np.unique(flat, return_inverse=True)
        rows = keys // k
        vals = _segment_sums(slot, weighted, keys.size) / masses[rows]
        agg = sp.csr_matrix((vals, (rows, keys % k)), shape=(k, k))
    return AggregatedTargetProblem(agg, target_blocks_of(partition, problem), problem.beta)


def lift_partition(partition_coarse: Partition, partition_fine: Partition) -> np.ndarray:
    """Map each fine block index to the coarse block that contains it."""
    if partition_coarse.n_states != partition_fine.n_states:
        raise ValueError("partitions cover different state counts")
    out = np.empty(partition_fine.n_blocks, dtype=np.int64)
    for i, b in enumerate(partition_fine.blocks):
        parents = partition_coarse.block_of[b]
        if np.any(parents != parents[0]):
            raise ValueError(f"fine block {i} straddles coarse blocks; not a refinement")
        out[i] = parents[0]
    return out


def coarse_sums(aggregated_row: np.ndarray, fine_to_coarse: np.ndarray, n_coarse: int) -> np.ndarray:
    """Sum a fine block-probability row onto coarse blocks."""
    return np.bincount(fine_to_coarse, weights=aggregated_row, minlength=n_coarse)


def aggregated_row(agg: AggregatedTargetProblem, i: int) -> np.ndarray:
    m = agg.matrix
    return m.getrow(i).toarray().ravel() if sp.issparse(m) else m[i]


def target_blocks_of(partition: Partition, problem: TargetProblem) -> Tuple[int, ...]:
    """Blocks meeting ``T``; a single ``(0,)`` for partitions that keep ``T`` whole."""
    mask = problem.target_mask
    return tuple(i for i, b in enumerate(partition.blocks) if mask[b].any())
