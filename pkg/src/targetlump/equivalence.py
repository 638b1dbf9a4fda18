"""Discrete equivalences on probability vectors.

The epsilon-cut puts coordinate ``j`` (0-based) on a grid of width
``epsilon * 2**-(j+1)``; two vectors are equivalent when every coordinate
falls in the same cell. Equivalent vectors are within ``epsilon`` in l1.

Keys are int64. Cell indices below 2**53 are stored as non-negative
integers. Past that point a cell is narrower than one ulp of the value, so
the cell is identified by the value itself and stored as ``-(bits + 1)``.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

ClassKey = Tuple[int, ...]

GUARD_ULPS = 4
_EXACT_LIMIT = 2.0 ** 53


@dataclass(frozen=True)
class EpsilonCut:
    epsilon: float
    weight_exponent_base: int = 2

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        if self.weight_exponent_base != 2:
            raise ValueError("only dyadic cell widths are supported")

    def width(self, j: int) -> float:
        return float(np.ldexp(self.epsilon, -(j + 1)))


def _check_nonnegative(values: np.ndarray) -> None:
    # negative floor keys would collide with the value-identity keys
    if values.size and not values.min() >= 0:
        raise ValueError("class keys need non-negative finite values")


def _value_bits(values: np.ndarray) -> np.ndarray:
    # +0.0 folds -0.0 into 0.0
    return (np.asarray(values, dtype=np.float64) + 0.0).view(np.int64)


def cut_keys(values, coords, epsilon: float) -> np.ndarray:
    """Vectorized epsilon-cut cell indices of ``values`` at coordinates ``coords``.

    Quotients within ``GUARD_ULPS`` ulps of an integer are snapped onto it
    before flooring, so round-off around a cell boundary cannot separate
    values that agree up to a few ulps.
    """
    values = np.asarray(values, dtype=np.float64)
    coords = np.asarray(coords, dtype=np.int64)
    _check_nonnegative(values)
    with np.errstate(over="ignore"):
        q = np.ldexp(values / epsilon, coords + 1)
    keys = np.empty(values.shape, dtype=np.int64)
    small = q < _EXACT_LIMIT
    qs = q[small]
    nearest = np.round(qs)
    snap = np.abs(qs - nearest) <= GUARD_ULPS * np.spacing(np.abs(qs))
    qs = np.where(snap, nearest, qs)
    keys[small] = np.floor(qs).astype(np.int64)
    keys[~small] = -(_value_bits(values[~small]) + 1)
    return keys


def grid_keys(values, delta: float) -> np.ndarray:
    """Exact-mode keys: float bits when ``delta == 0``, else ``floor(v / delta)``."""
    values = np.asarray(values, dtype=np.float64)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    _check_nonnegative(values)
    if delta == 0:
        return _value_bits(values)
    q = values / delta
    keys = np.empty(values.shape, dtype=np.int64)
    small = q < _EXACT_LIMIT
    keys[small] = np.floor(q[small]).astype(np.int64)
    keys[~small] = -(_value_bits(values[~small]) + 1)
    return keys


def class_key(cut: EpsilonCut, v) -> ClassKey:
    """Epsilon-cut class of the probability vector ``v``.

    >>> class_key(EpsilonCut(0.5), [1.0, 0.0]) == class_key(EpsilonCut(0.5), [0.96, 0.04])
    False
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("class_key needs a non-empty vector")
    return tuple(int(k) for k in cut_keys(v, np.arange(v.size), cut.epsilon))


def exact_key(v, delta: float = 0.0) -> ClassKey:
    """Grid key with cell width ``delta``; ``delta == 0`` compares coordinates bitwise.

    For ``delta > 0`` two values closer than ``delta`` can still land on
    either side of a grid line. This is a known limit of grid snapping.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    return tuple(int(k) for k in grid_keys(v, delta))
