"""Divide-and-conquer evolutionary channel-pruning planner."""

from .arch import (ArchitectureSpec, BlockSpec, LayerSpec, PruneCoding,
                   SubnetPartition, build_preset, cost, decode_coding,
                   encode_baseline, network_cost, partition_by_resolution,
                   pruning_rates, validate_coding)
from .estimator import PruningPlanner
from .evaluators import (CachedEvaluator, EvalRequest, EvalResult,
                         SurrogateEvaluator, SurrogateParams, WorkerClient)
from .nsga2 import (EvolutionConfig, Individual, Objectives, OptimizationResult,
                    SubnetContext, crowding_distance, dominates, evolve,
                    fast_nondominated_sort, poly_mutate_integer, sbx_integer)
from .pipeline import RunConfig, plan_and_report, run_pipeline
from .planner import (DeltaRecord, FrontSolution, ImpairmentEntry, JointScheme,
                      build_scheme, compute_deltas, compute_gpii,
                      plan_for_architecture, rank)
from .spaces import (SpaceReport, divided_space, reachable_combinations,
                     space_report, whole_space)

__version__ = "0.1.0"

__all__ = [
    "ArchitectureSpec", "BlockSpec", "LayerSpec", "PruneCoding",
    "SubnetPartition", "build_preset", "cost", "decode_coding",
    "encode_baseline", "network_cost", "partition_by_resolution",
    "pruning_rates", "validate_coding",
    "PruningPlanner",
    "CachedEvaluator", "EvalRequest", "EvalResult", "SurrogateEvaluator",
    "SurrogateParams", "WorkerClient",
    "EvolutionConfig", "Individual", "Objectives", "OptimizationResult",
    "SubnetContext", "crowding_distance", "dominates", "evolve",
    "fast_nondominated_sort", "poly_mutate_integer", "sbx_integer",
    "RunConfig", "plan_and_report", "run_pipeline",
    "DeltaRecord", "FrontSolution", "ImpairmentEntry", "JointScheme",
    "build_scheme", "compute_deltas", "compute_gpii", "plan_for_architecture",
    "rank",
    "SpaceReport", "divided_space", "reachable_combinations", "space_report",
    "whole_space",
    "__version__",
]
