"""Vertex-reinforced random walk simulation and path-wise verification.

Subpackages by concern:

  weights     normalized non-decreasing reinforcement sequences
  walk        walk state, stepping, trajectories, crossing bookkeeping
  records     stable binary trajectory record files
  martingale  drift-free instrumentation and its path-wise checkers
  lemma       constrained objective, grid oracle, multi-start minimizer
  kernels     compiled fast paths (numba) mirrored by the reference code
  config      flat key = value experiment configuration
  experiments Monte Carlo drivers, verification sweeps, CSV output
  cli         `vrrw` command-line entry point
"""

from .weights import WeightFunction, make_weight
from .walk import (WalkState, TrajectoryRecord, TrajectorySummary,
                   crossing_counts, prob_right, replay_moves, run_trajectory,
                   step)
from .martingale import (AParams, DEFAULT_EPSILON, MartingaleState, a_coeff,
                         big_a, decompose, delta_bound_margin,
                         expected_increment, log_big_a, mg_init, mg_update,
                         stopped_lower_bound)
from .lemma import (LemmaInstance, evaluate_sum, grid_oracle, local_minimize,
                    scaling_scan)
from .config import ConfigError, ExperimentConfig
from .records import read_record, write_record

__version__ = "0.1.0"

__all__ = [
    "WeightFunction", "make_weight",
    "WalkState", "TrajectoryRecord", "TrajectorySummary", "crossing_counts",
    "prob_right", "replay_moves", "run_trajectory", "step",
    "AParams", "DEFAULT_EPSILON", "MartingaleState", "a_coeff", "big_a",
    "decompose", "delta_bound_margin", "expected_increment", "log_big_a",
    "mg_init", "mg_update", "stopped_lower_bound",
    "LemmaInstance", "evaluate_sum", "grid_oracle", "local_minimize",
    "scaling_scan",
    "ConfigError", "ExperimentConfig",
    "read_record", "write_record",
    "__version__",
]
