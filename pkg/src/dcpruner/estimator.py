"""Scikit-learn style front door for the pruning search.

``PruningPlanner`` follows the estimator protocol (constructor params,
``get_params``/``set_params``, ``fit`` then trailing-underscore
attributes) so it composes with sklearn tooling.  ``fit`` runs the
divide-and-conquer search in memory with the deterministic surrogate
evaluator (or any evaluator callable passed explicitly) and ``predict``
turns target pruning rates into joint schemes without re-searching.
"""

from __future__ import annotations

from typing import Callable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import arch as archmod
from . import planner
from .evaluators import CachedEvaluator, SurrogateEvaluator, SurrogateParams
from .nsga2 import EvolutionConfig, SubnetContext, evolve
from .rng import SplitMix64, subseed


class PruningPlanner(BaseEstimator):
    """Searches per-sub-network pruning fronts and plans joint schemes.

    Parameters
    ----------
    preset : str, default="resnet56"
        Architecture preset name.
    num_classes : int, default=10
    input_size : int, default=32
    population_size, offspring, iterations : int
        NSGA-II budget per sub-network.
    eta_crossover, eta_mutation : float
        Distribution indices for the variation operators.
    mutation_prob : float or None
        Per-gene mutation probability; None means 1/genome_length.
    base_error, amplitude, linear, jitter : float
        Surrogate evaluator shape (ignored when ``fit`` receives an
        explicit evaluator).
    ranking_direction : {"ascending", "descending"}
    seed : int
        Stream seed; identical seeds reproduce results bit-for-bit.

    Attributes
    ----------
    arch_ : ArchitectureSpec
    partition_ : SubnetPartition
    fronts_ : dict mapping subnet index to list of FrontSolution
    baselines_ : dict mapping subnet index to (params, error)
    ranking_ : list of ImpairmentEntry
    n_evaluations_ : int
    """

    def __init__(self, preset="resnet56", num_classes=10, input_size=32,
                 population_size=8, offspring=4, iterations=3,
                 eta_crossover=20.0, eta_mutation=20.0, mutation_prob=None,
                 base_error=0.30, amplitude=0.5, linear=0.05, jitter=0.01,
                 ranking_direction="ascending", seed=0):
        self.preset = preset
        self.num_classes = num_classes
        self.input_size = input_size
        self.population_size = population_size
        self.offspring = offspring
        self.iterations = iterations
        self.eta_crossover = eta_crossover
        self.eta_mutation = eta_mutation
        self.mutation_prob = mutation_prob
        self.base_error = base_error
        self.amplitude = amplitude
        self.linear = linear
        self.jitter = jitter
        self.ranking_direction = ranking_direction
        self.seed = seed

    def fit(self, X=None, y=None,
            evaluator: Callable[[int, tuple[int, ...]], float] | None = None):
        """Run the per-sub-network searches and build the global ranking.

        ``X`` and ``y`` are accepted for interface compatibility and
        ignored; the search space comes from the constructor parameters.
        """
        spec = archmod.build_preset(self.preset, self.num_classes, self.input_size)
        part = archmod.partition_by_resolution(spec)

        def subnet_params(subnet: int, genes: tuple[int, ...]) -> float:
            return archmod.subnet_cost(spec, part,
                                       archmod.PruneCoding(subnet, genes))[0]

        if evaluator is None:
            baselines = [
                subnet_params(i, archmod.encode_baseline(spec, part, i).genes)
                for i in range(part.num_subnets)
            ]
            evaluator = SurrogateEvaluator(
                SurrogateParams((self.base_error,) * part.num_subnets,
                                self.amplitude, self.linear, self.jitter,
                                self.seed),
                subnet_params, baselines)
        evaluator = CachedEvaluator(evaluator)

        config = EvolutionConfig(
            population_size=self.population_size,
            offspring_per_iteration=self.offspring,
            iterations=self.iterations,
            eta_crossover=self.eta_crossover,
            eta_mutation=self.eta_mutation,
            mutation_prob=self.mutation_prob,
            seed=self.seed,
        )

        fronts: dict[int, list[planner.FrontSolution]] = {}
        baselines_out: dict[int, tuple[float, float]] = {}
        evaluations = 0
        for subnet in range(part.num_subnets):
            bounds = archmod.gene_bounds(spec, part, subnet)
            ctx = SubnetContext(
                subnet, bounds,
                lambda genes, s=subnet: subnet_params(s, genes))
            result = evolve(ctx, config, evaluator,
                            SplitMix64(subseed(self.seed, subnet)))
            evaluations += result.evaluations
            fronts[subnet] = [
                planner.FrontSolution(subnet, ind.genes, ind.objectives.params,
                                      ind.objectives.error)
                for ind in result.first_front
            ]
            anchor = next(ind for ind in result.archive if ind.genes == bounds)
            baselines_out[subnet] = (anchor.objectives.params,
                                     anchor.objectives.error)

        self.arch_ = spec
        self.partition_ = part
        self.fronts_ = fronts
        self.baselines_ = baselines_out
        self.ranking_ = planner.rank_fronts(fronts, baselines_out,
                                            self.ranking_direction)
        self.n_evaluations_ = evaluations
        return self

    def predict(self, target_pr):
        """Joint scheme(s) for the given target pruning rate(s).

        A scalar returns one ``JointScheme``; a sequence returns a list,
        one per target.  Pure replanning over the fitted ranking.
        """
        check_is_fitted(self, "ranking_")
        if isinstance(target_pr, (int, float)):
            return planner.plan_for_architecture(
                self.arch_, self.partition_, self.ranking_, float(target_pr))
        return [
            planner.plan_for_architecture(self.arch_, self.partition_,
                                          self.ranking_, float(t))
            for t in target_pr
        ]

    def plan(self, target_pr: float) -> planner.JointScheme:
        """Alias for ``predict`` with a single target."""
        return self.predict(float(target_pr))
