"""Target-preserving lumping of finite Markov chains."""

from .aggregation import (AggregatedTargetProblem, aggregate, geometric_block_measure, lift_partition,
                          uniform_measure)
from .chain import (Filtration, Partition, StateMeasure, TargetProblem, restrict_row, restrict_rows,
                    validate)
from .equivalence import ClassKey, EpsilonCut, class_key, exact_key
from .estimator import TargetLumping
from .generators import coupon_collector, lifted_chain, random_block_matrix, random_chain
from .metrics import (Certified, HittingProfile, distance_d, hitting_profile, horizon_for,
                      state_pseudometric, tail_bound, tv_distance)
from .refinement import exact_fixpoint, initial_partition, is_compatible, refine_once, run_target_algorithm

__version__ = "0.1.0"

__all__ = [
    "AggregatedTargetProblem", "Certified", "ClassKey", "EpsilonCut", "Filtration", "HittingProfile",
    "Partition", "StateMeasure", "TargetLumping", "TargetProblem", "aggregate", "class_key",
    "coupon_collector", "distance_d", "exact_fixpoint", "exact_key", "geometric_block_measure",
    "hitting_profile", "horizon_for", "initial_partition", "is_compatible", "lift_partition",
    "random_block_matrix", "random_chain", "refine_once", "restrict_row", "restrict_rows",
    "run_target_algorithm", "state_pseudometric", "tail_bound", "tv_distance", "uniform_measure",
    "validate", "lifted_chain",
]
