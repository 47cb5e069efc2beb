"""Multi-self-loop lackadaisical quantum walk search on hypercubes."""

__version__ = "0.1.0"

from .hypercube import (MarkedSet, SamplingError, hamming_distance, is_mutually_non_adjacent,
                        neighbor, sample_non_adjacent_set)
from .weights import LoopWeights, WeightScheme, self_loop_weight, split_per_loop
from .walk import (OracleMode, WalkConfig, WalkResult, apply_coin, apply_oracle_full,
                   apply_oracle_partial, apply_shift, evolve, first_lobe_peak, initial_state,
                   run_walk, step, success_probability)
from .estimator import LackadaisicalSearch, check_marked_sets
from .fitting import (FitResult, LogRuntimeModel, SqrtRuntimeModel, fit_log_model,
                      fit_sqrt_model)
from .experiments import BatchPlan, BatchResult, coefficient_of_variation, run_batch

__all__ = [
    "MarkedSet", "SamplingError", "hamming_distance", "is_mutually_non_adjacent", "neighbor",
    "sample_non_adjacent_set", "LoopWeights", "WeightScheme", "self_loop_weight",
    "split_per_loop", "OracleMode", "WalkConfig", "WalkResult", "apply_coin",
    "apply_oracle_full", "apply_oracle_partial", "apply_shift", "evolve", "first_lobe_peak", "initial_state", "run_walk",
    "step", "success_probability", "LackadaisicalSearch", "check_marked_sets", "FitResult",
    "LogRuntimeModel", "SqrtRuntimeModel", "fit_log_model", "fit_sqrt_model", "BatchPlan",
    "BatchResult", "coefficient_of_variation", "run_batch",
]
