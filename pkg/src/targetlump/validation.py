"""Input checks shared by the estimator API."""

import numbers

import numpy as np
import scipy.sparse as sp
from sklearn.utils.validation import check_array

from .chain import ROW_SUM_TOL


def check_transition_matrix(X, tol: float = ROW_SUM_TOL) -> sp.csr_matrix:
    """Validate a square row-stochastic matrix and return it as sorted CSR."""
    X = check_array(X, accept_sparse="csr", dtype=np.float64)
    X = sp.csr_matrix(X)
    if X.shape[0] != X.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape {X.shape}")
    if X.nnz and (X.data.min() < 0 or X.data.max() > 1):
        raise ValueError("transition probabilities must lie in [0, 1]")
    sums = np.asarray(X.sum(axis=1)).ravel()
    off = np.abs(sums - 1.0)
    if np.any(off > tol):
        x = int(np.argmax(off))
        raise ValueError(f"row {x} sums to {sums[x]:.17g}; rows must sum to 1 within {tol:g}")
    X.sort_indices()
    return X


def check_target(target, n_states: int) -> np.ndarray:
    t = np.unique(np.asarray(target, dtype=np.int64).ravel())
    if t.size == 0:
        raise ValueError("target must be non-empty")
    if t[0] < 0 or t[-1] >= n_states:
        raise ValueError(f"target states must lie in 0..{n_states - 1}")
    if t.size == n_states:
        raise ValueError("target must leave at least one state outside")
    return t


def check_beta(beta) -> float:
    if not isinstance(beta, numbers.Real) or not 0 < beta < 1:
        raise ValueError(f"beta must be a real number in (0, 1), got {beta!r}")
    return float(beta)
