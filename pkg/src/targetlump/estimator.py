"""Scikit-learn style front end for target-preserving lumping."""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .aggregation import aggregate, geometric_block_measure, uniform_measure
from .chain import TargetProblem, restrict_rows
from .metrics import distance_d
from .refinement import DEFAULT_DELTA, run_target_algorithm
from .validation import check_beta, check_target, check_transition_matrix


class TargetLumping(ClusterMixin, TransformerMixin, BaseEstimator):
    """Lump the states of a Markov chain while tracking hits of a target set.

    ``fit`` takes the ``N x N`` transition matrix and groups states the way
    a clustering estimator groups samples: ``labels_[x]`` is the block of
    state ``x``. ``transform`` maps a transition matrix onto the fitted
    blocks, giving each row's probability of jumping into every block.

    Parameters
    ----------
    target : array-like of int
        Target states ``T``.
    beta : float, default=0.5
        Discount rate of the target distance.
    schedule : sequence of float, default=(0.5, 0.1, 0.05)
        Non-increasing epsilons; a trailing ``0`` refines to the exact fixpoint.
    delta : float, default=1e-12
        Grid width used by exact (``epsilon = 0``) steps.
    measure : {"uniform", "geometric"}, default="uniform"
        State weights used to average rows inside a block.
    threads : int, default=1
        Worker threads for key computation; results do not depend on it.

    Attributes
    ----------
    problem_ : TargetProblem
    filtration_ : Filtration
    partition_ : Partition
        Final partition of the filtration.
    labels_ : ndarray of shape (n_states,)
    n_blocks_ : int
    measure_ : StateMeasure
    aggregated_ : AggregatedTargetProblem

    Examples
    --------
    >>> from targetlump.generators import coupon_collector
    >>> P = coupon_collector(4).matrix
    >>> est = TargetLumping(target=[14], schedule=(0.5, 0)).fit(P)
    >>> est.n_blocks_
    4
    """

    def __init__(self, target=None, beta=0.5, schedule=(0.5, 0.1, 0.05), delta=DEFAULT_DELTA,
                 measure="uniform", threads=1):
        self.target = target
        self.beta = beta
        self.schedule = schedule
        self.delta = delta
        self.measure = measure
        self.threads = threads

    def fit(self, X, y=None):
        P = check_transition_matrix(X)
        if self.target is None:
            raise ValueError("target must be given")
        target = check_target(self.target, P.shape[0])
        beta = check_beta(self.beta)
        if self.measure not in ("uniform", "geometric"):
            raise ValueError(f"unknown measure {self.measure!r}")
        self.problem_ = TargetProblem(P, target, beta).check()
        self.filtration_ = run_target_algorithm(self.problem_, list(self.schedule), self.delta, self.threads)
        self.partition_ = self.filtration_.final
        self.labels_ = np.array(self.partition_.block_of)
        self.n_blocks_ = self.partition_.n_blocks
        if self.measure == "uniform":
            self.measure_ = uniform_measure(self.problem_)
        else:
            self.measure_ = geometric_block_measure(self.filtration_)
        self.aggregated_ = aggregate(self.problem_, self.partition_, self.measure_)
        return self

    def transform(self, X):
        """Row-wise block probabilities ``X Q``; dense ``(n_states, n_blocks_)``."""
        check_is_fitted(self, "partition_")
        P = check_transition_matrix(X)
        if P.shape[0] != self.partition_.n_states:
            raise ValueError(f"expected {self.partition_.n_states} states, got {P.shape[0]}")
        return restrict_rows(TargetProblem(P, self.problem_.target, self.problem_.beta),
                             self.partition_).toarray()

    def predict(self, X=None):
        """Block labels of the fitted states (``X`` is accepted for API symmetry)."""
        check_is_fitted(self, "labels_")
        return self.labels_.copy()

    def score(self, X, y=None, tail_tol=1e-6):
        """Negated certified target distance between ``X`` and the fitted aggregation."""
        check_is_fitted(self, "aggregated_")
        P = check_transition_matrix(X)
        problem = TargetProblem(P, self.problem_.target, self.problem_.beta)
        return -distance_d(problem, self.aggregated_, self.partition_, tail_tol).value
