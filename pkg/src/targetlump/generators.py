"""Benchmark target problems: coupon collector, lifted block chains, random chains."""

from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .chain import ROW_SUM_TOL, Partition, TargetProblem

MAX_COUPONS = 24


def coupon_collector(n: int, p: Optional[Sequence[float]] = None, beta: float = 0.5) -> TargetProblem:
    """Coupon collector over ``n`` objects as a chain on the nonempty subsets.

    State ``mask - 1`` is the set of collected objects encoded as bitmask
    ``mask``. Drawing object ``i`` moves to ``mask | 1 << i``; already held
    objects give a self-loop. The full set is the absorbing target.
    """
    if not 2 <= n <= MAX_COUPONS:
        raise ValueError(f"n must be in 2..{MAX_COUPONS}, got {n}")
    if p is None:
        p = np.full(n, 1.0 / n)
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (n,) or np.any(~(p > 0)) or abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise ValueError("p must be n positive probabilities summing to 1")
    size = (1 << n) - 1
    masks = np.arange(1, size + 1, dtype=np.int64)
    held = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    # self-loop mass summed in object order
    self_mass = np.zeros(size)
    for i in range(n):
        self_mass += np.where(held[:, i], p[i], 0.0)
    self_mass[-1] = 1.0
    rows = [np.arange(size)]
    cols = [np.arange(size)]
    vals = [self_mass]
    for i in range(n):
        move = ~held[:, i]
        rows.append(np.flatnonzero(move))
        cols.append((masks[move] | (1 << i)) - 1)
        vals.append(np.full(int(move.sum()), p[i]))
    m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(size, size))
    return TargetProblem(m, [size - 1], beta)


def _check_block_matrix(block_matrix) -> np.ndarray:
    b = np.asarray(block_matrix, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] < 2:
        raise ValueError("block matrix must be square with at least 2 blocks")
    if np.any(b < 0) or np.any(b > 1) or np.any(np.abs(b.sum(axis=1) - 1.0) > ROW_SUM_TOL):
        raise ValueError("block matrix must be row-stochastic")
    return b


def _split_mass(total: float, k: int, rng) -> np.ndarray:
    """Split ``total`` into ``k`` positive parts whose left-to-right float sum is ``total``."""
    if k == 1:
        return np.array([total])
    w = rng.dirichlet(np.ones(k))
    # the last part is a remainder; keeping it <= 1/2 makes the subtraction exact (Sterbenz)
    if w[-1] > 0.5:
        j = int(np.argmin(w))
        w[-1], w[j] = w[j], w[-1]
    parts = total * w
    head = 0.0
    for v in parts[:-1]:
        head += v
    parts[-1] = total - head
    return parts


def lifted_chain(block_matrix, sizes: Sequence[int], seed: int = 0, target_block: int = 0,
                 beta: float = 0.5) -> Tuple[TargetProblem, Partition]:
    """Expand a block chain into a state chain with a known compatible partition.

    Block ``i`` owns ``sizes[i]`` consecutive states. Every state of block
    ``i`` sends total mass ``block_matrix[i, j]`` into block ``j``, spread
    over that block's members with seeded random weights.

    Returns
    -------
    problem : TargetProblem
    partition : Partition
        The generating partition, in canonical order when ``target_block`` is 0.
    """
    b = _check_block_matrix(block_matrix)
    k = b.shape[0]
    sizes = [int(s) for s in sizes]
    if len(sizes) != k or min(sizes) < 1:
        raise ValueError("need one size >= 1 per block")
    if not 0 <= target_block < k:
        raise ValueError("target block out of range")
    rng = np.random.default_rng(seed)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    n = int(offsets[-1])
    rows, cols, vals = [], [], []
    for i in range(k):
        for x in range(offsets[i], offsets[i + 1]):
            for j in range(k):
                if b[i, j] == 0:
                    continue
                parts = _split_mass(b[i, j], sizes[j], rng)
                members = np.arange(offsets[j], offsets[j + 1])
                keep = parts > 0
                rows.append(np.full(int(keep.sum()), x))
                cols.append(members[keep])
                vals.append(parts[keep])
    m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    target = range(offsets[target_block], offsets[target_block + 1])
    blocks = [range(offsets[i], offsets[i + 1]) for i in range(k)]
    problem = TargetProblem(m, target, beta)
    return problem, Partition(blocks, n)


def random_block_matrix(n_blocks: int, seed: int = 0) -> np.ndarray:
    """Seeded block chain with an absorbing target block 0 and dense random other rows."""
    if n_blocks < 2:
        raise ValueError("need at least 2 blocks")
    rng = np.random.default_rng(seed)
    b = rng.dirichlet(np.ones(n_blocks), size=n_blocks)
    b[0] = 0.0
    b[0, 0] = 1.0
    return b


def random_chain(n_states: int, density: float = 0.2, target_size: int = 1, seed: int = 0,
                 resolution: Optional[int] = None, beta: float = 0.5) -> TargetProblem:
    """Seeded sparse chain whose last ``target_size`` states are absorbing.

    With ``resolution`` set, every probability is a multiple of
    ``1 / resolution``; a power of two keeps all row arithmetic exact.
    """
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    if not 1 <= target_size < n_states:
        raise ValueError("need 1 <= target_size < n_states")
    if resolution is not None and resolution < 1:
        raise ValueError("resolution must be >= 1")
    rng = np.random.default_rng(seed)
    free = n_states - target_size
    support = max(1, int(round(density * n_states)))
    rows, cols, vals = [], [], []
    for x in range(free):
        c = np.sort(rng.choice(n_states, size=support, replace=False))
        if resolution is None:
            w = rng.exponential(size=support)
            v = w / w.sum()
        else:
            v = rng.multinomial(resolution, np.full(support, 1.0 / support)) / resolution
        rows.append(np.full(support, x))
        cols.append(c)
        vals.append(v)
    rows.append(np.arange(free, n_states))
    cols.append(np.arange(free, n_states))
    vals.append(np.ones(target_size))
    m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n_states, n_states))
    return TargetProblem(m, range(free, n_states), beta)
