"""Target-hitting profiles and the discounted target pseudometrics."""

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Union

import numpy as np

from .aggregation import AggregatedTargetProblem
from .chain import Partition, TargetProblem

Chain = Union[TargetProblem, AggregatedTargetProblem]


class Certified(NamedTuple):
    """Truncated series value and a certified upper end; the true value lies in ``[value, bound]``."""

    value: float
    bound: float


@dataclass
class HittingProfile:
    """``values[n-1, x] = P^n(x, T)`` for ``n = 1..horizon``."""

    horizon: int
    values: np.ndarray


def _target_indicator(chain: Chain) -> np.ndarray:
    return chain.target_mask.astype(np.float64)


def _iter_profile(chain: Chain, horizon: int) -> Iterator[np.ndarray]:
    m = chain.matrix
    h = _target_indicator(chain)
    for _ in range(horizon):
        h = m @ h
        yield np.asarray(h).ravel()


def hitting_profile(chain: Chain, horizon: int) -> HittingProfile:
    """Probabilities of sitting in the target after ``1..horizon`` steps.

    One matrix-vector product per step; matrix powers are never formed.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    return HittingProfile(horizon, np.vstack(list(_iter_profile(chain, horizon))))


def tail_bound(beta: float, horizon: int) -> float:
    """Upper bound ``2 beta^(H+1) / (1 - beta)`` on the series tail after ``H`` terms."""
    return 2.0 * beta ** (horizon + 1) / (1.0 - beta)


def horizon_for(beta: float, tail_tol: float) -> int:
    """Smallest horizon the closed form gives with ``tail_bound(beta, H) <= tail_tol``."""
    if tail_tol <= 0:
        raise ValueError("tail_tol must be > 0")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    h = max(1, math.ceil(math.log(tail_tol * (1.0 - beta) / 2.0) / math.log(beta)))
    while tail_bound(beta, h) > tail_tol:
        h += 1
    return h


def distance_d(problem: TargetProblem, aggregated: AggregatedTargetProblem,
               partition: Partition, tail_tol: float = 1e-6) -> Certified:
    """Discounted sup-distance between the target profiles of a chain and its aggregation.

    Aggregated profiles are computed per block and read through
    ``partition.block_of``; nothing of size ``N x H`` is materialized.
    """
    if problem.beta != aggregated.beta:
        raise ValueError(f"beta mismatch: {problem.beta} vs {aggregated.beta}")
    if partition.n_states != problem.n_states or partition.n_blocks != aggregated.n_blocks:
        raise ValueError("partition does not map the chain onto the aggregated blocks")
    beta = problem.beta
    horizon = horizon_for(beta, tail_tol)
    acc = np.zeros(problem.n_states)
    weight = 1.0
    for h_full, h_block in zip(_iter_profile(problem, horizon), _iter_profile(aggregated, horizon)):
        weight *= beta
        acc += weight * np.abs(h_full - h_block[partition.block_of])
    value = float(acc.max())
    return Certified(value, value + tail_bound(beta, horizon))


def state_pseudometric(problem: TargetProblem, x: int, y: int, tail_tol: float = 1e-6) -> Certified:
    """Discounted distance between the target profiles of two states of one chain."""
    n = problem.n_states
    if not (0 <= x < n and 0 <= y < n):
        raise IndexError("state out of range")
    horizon = horizon_for(problem.beta, tail_tol)
    value = 0.0
    weight = 1.0
    for h in _iter_profile(problem, horizon):
        weight *= problem.beta
        value += weight * abs(h[x] - h[y])
    return Certified(value, value + tail_bound(problem.beta, horizon))


def pseudometric_matrix(problem: TargetProblem, tail_tol: float = 1e-6) -> np.ndarray:
    """All pairwise state distances at once; intended for small chains."""
    horizon = horizon_for(problem.beta, tail_tol)
    out = np.zeros((problem.n_states, problem.n_states))
    weight = 1.0
    for h in _iter_profile(problem, horizon):
        weight *= problem.beta
        out += weight * np.abs(h[:, None] - h[None, :])
    return out


def tv_distance(p, q) -> float:
    """Total variation distance, half the l1 distance."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())

