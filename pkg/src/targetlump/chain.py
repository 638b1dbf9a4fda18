"""Finite target problems, partitions, filtrations and state measures.

States are dense integer indices ``0..N-1``. Transition matrices are kept
as CSR matrices with sorted column indices, so each row is a list of
``(column, probability)`` pairs in increasing column order.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

ROW_SUM_TOL = 1e-12


def _as_csr(matrix) -> sp.csr_matrix:
    if sp.issparse(matrix):
        m = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
    else:
        m = sp.csr_matrix(np.asarray(matrix, dtype=np.float64))
    m.eliminate_zeros()
    m.sort_indices()
    return m


class TargetProblem:
    r"""A finite Markov chain together with a target set and a discount rate.

    Parameters
    ----------
    matrix : array_like or sparse matrix, shape (N, N)
        Row-stochastic transition matrix, ``matrix[x, y] = P(x, {y})``.
    target : sequence of int
        Indices of the target states ``T``.
    beta : float
        Discount rate in ``(0, 1)``.

    Notes
    -----
    Construction does not reject invalid input; call :func:`validate` to
    list violations or :meth:`check` to raise on the first one. Rows are
    never renormalized.
    """

    def __init__(self, matrix, target: Sequence[int], beta: float = 0.5):
        self.matrix = _as_csr(matrix)
        self.target = np.array(sorted(set(int(t) for t in target)), dtype=np.int64)
        self.beta = float(beta)

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    @property
    def target_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=bool)
        inside = self.target[(self.target >= 0) & (self.target < self.n_states)]
        mask[inside] = True
        return mask

    def row(self, x: int) -> Tuple[np.ndarray, np.ndarray]:
        """Column indices and probabilities of row ``x``."""
        lo, hi = self.matrix.indptr[x], self.matrix.indptr[x + 1]
        return self.matrix.indices[lo:hi], self.matrix.data[lo:hi]

    def check(self) -> "TargetProblem":
        violations = validate(self)
        if violations:
            raise ValueError("invalid target problem: " + "; ".join(violations))
        return self

    def __repr__(self):
        return (f"TargetProblem(n_states={self.n_states}, nnz={self.matrix.nnz}, "
                f"target={self.target.tolist()[:8]}{'...' if len(self.target) > 8 else ''}, "
                f"beta={self.beta})")


def validate(problem: TargetProblem) -> List[str]:
    """Return every invariant violation of ``problem``; empty when valid."""
    out = []
    m = problem.matrix
    n_rows, n_cols = m.shape
    if n_rows != n_cols:
        out.append(f"matrix is not square ({n_rows}x{n_cols})")
    if not (0.0 < problem.beta < 1.0):
        out.append(f"beta {problem.beta!r} outside (0, 1)")
    data = m.data
    bad = ~np.isfinite(data) | (data < 0.0) | (data > 1.0)
    if bad.any():
        rows = np.repeat(np.arange(n_rows), np.diff(m.indptr))
        for k in np.flatnonzero(bad):
            out.append(f"entry ({rows[k]}, {m.indices[k]}) = {data[k]!r} outside [0, 1]")
    for x in range(n_rows):
        cols = m.indices[m.indptr[x]:m.indptr[x + 1]]
        if cols.size > 1 and np.any(np.diff(cols) <= 0):
            out.append(f"row {x} has duplicate column indices")
    sums = np.asarray(m.sum(axis=1)).ravel()
    for x in np.flatnonzero(~(np.abs(sums - 1.0) <= ROW_SUM_TOL)):
        out.append(f"row {x} sums to {sums[x]:.17g} (off by {abs(sums[x] - 1.0):.3g})")
    t = problem.target
    if t.size == 0:
        out.append("target empty")
    else:
        if t.min() < 0 or t.max() >= n_rows:
            out.append("target contains out-of-range states")
        if np.unique(t[(t >= 0) & (t < n_rows)]).size >= n_rows:
            out.append("target complement empty")
    return out


class Partition:
    """Ordered disjoint blocks covering ``0..N-1``.

    ``block_of[x]`` is the index of the block holding state ``x``. Use
    :meth:`from_labels` to build a partition in canonical block order.
    """

    def __init__(self, blocks: Sequence[Sequence[int]], n_states: int = None):
        blocks = [np.array(sorted(int(x) for x in b), dtype=np.int64) for b in blocks]
        blocks = [b for b in blocks if b.size]
        if n_states is None:
            n_states = int(sum(b.size for b in blocks))
        block_of = np.full(n_states, -1, dtype=np.int64)
        for i, b in enumerate(blocks):
            if b.min() < 0 or b.max() >= n_states:
                raise ValueError(f"block {i} has states outside 0..{n_states - 1}")
            if np.any(block_of[b] >= 0):
                raise ValueError("blocks are not disjoint")
            block_of[b] = i
        if np.any(block_of < 0):
            raise ValueError(f"blocks do not cover state {int(np.flatnonzero(block_of < 0)[0])}")
        self.blocks = tuple(blocks)
        self.block_of = block_of
        self.block_of.setflags(write=False)

    @classmethod
    def from_labels(cls, labels, target_mask=None) -> "Partition":
        """Canonical partition from arbitrary per-state labels.

        Blocks inside the target come first, then the rest; within each
        group blocks are ordered by their smallest state.
        """
        labels = np.asarray(labels)
        n = labels.shape[0]
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order_key = first.astype(np.int64)
        if target_mask is not None:
            in_target = np.asarray(target_mask, dtype=bool)[first]
            order_key = order_key + np.where(in_target, 0, n)
        rank = np.empty(first.size, dtype=np.int64)
        rank[np.argsort(order_key, kind="stable")] = np.arange(first.size)
        block_of = rank[inverse.ravel()]
        obj = cls.__new__(cls)
        order = np.argsort(block_of, kind="stable")
        bounds = np.cumsum(np.bincount(block_of, minlength=first.size))[:-1]
        obj.blocks = tuple(np.split(order, bounds))
        obj.block_of = block_of
        obj.block_of.setflags(write=False)
        return obj

    @classmethod
    def singletons(cls, n_states: int) -> "Partition":
        return cls.from_labels(np.arange(n_states))

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def n_states(self) -> int:
        return self.block_of.shape[0]

    def sizes(self) -> np.ndarray:
        return np.array([b.size for b in self.blocks], dtype=np.int64)

    def indicator(self) -> sp.csr_matrix:
        """The ``N x n_blocks`` 0/1 membership matrix."""
        n = self.n_states
        return sp.csr_matrix((np.ones(n), (np.arange(n), self.block_of)),
                             shape=(n, self.n_blocks))

    def refines(self, coarser: "Partition") -> bool:
        """True when every block of ``self`` lies inside one block of ``coarser``."""
        if coarser.n_states != self.n_states:
            return False
        parent = coarser.block_of
        return all(np.all(parent[b] == parent[b[0]]) for b in self.blocks)

    def __eq__(self, other):
        return (isinstance(other, Partition) and self.n_states == other.n_states
                and np.array_equal(self.block_of, other.block_of))

    def __hash__(self):
        return hash(self.block_of.tobytes())

    def __repr__(self):
        shown = [b.tolist() for b in self.blocks[:6]]
        more = "..." if self.n_blocks > 6 else ""
        return f"Partition({shown}{more})"


@dataclass
class Filtration:
    """Monotone sequence of partitions with the epsilon that produced each.

    ``steps[0]`` carries ``epsilon = inf`` for the initial ``{T, X\\T}``
    partition. ``converged`` records that the last step is a fixpoint.
    """

    steps: List[Tuple[float, Partition]] = field(default_factory=list)
    converged: bool = False

    @property
    def epsilons(self) -> List[float]:
        return [e for e, _ in self.steps]

    @property
    def partitions(self) -> List[Partition]:
        return [p for _, p in self.steps]

    @property
    def final(self) -> Partition:
        return self.steps[-1][1]

    def class_counts(self) -> List[int]:
        return [p.n_blocks for _, p in self.steps]

    def __len__(self):
        return len(self.steps)


class StateMeasure:
    """Strictly positive probability weights over states."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise ValueError("state measure weights must be finite and strictly positive")
        if abs(w.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError(f"state measure sums to {w.sum():.17g}, not 1")
        self.weights = w
        self.weights.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.weights.size


def restrict_rows(problem: TargetProblem, partition: Partition) -> sp.csr_matrix:
    """All rows restricted to blocks: the ``N x n_blocks`` matrix ``P Q``.

    Sums run over each row's entries in increasing column order.
    """
    if partition.n_states != problem.n_states:
        raise ValueError("partition and problem disagree on the number of states")
    r = problem.matrix @ partition.indicator()
    r = sp.csr_matrix(r)
    r.sort_indices()
    return r


def restrict_row(problem: TargetProblem, x: int, partition: Partition) -> np.ndarray:
    """Probability vector ``v[j] = P(x, block j)`` over the blocks of ``partition``."""
    x = int(x)
    if not 0 <= x < problem.n_states:
        raise IndexError(f"state {x} out of range 0..{problem.n_states - 1}")
    cols, vals = problem.row(x)
    v = np.zeros(partition.n_blocks)
    for c, p in zip(partition.block_of[cols], vals):
        v[c] += p
    return v
