"""Integer-coded NSGA-II over prune codings.

Two objectives, both minimized: sub-network parameter count and the error
reported by a pluggable evaluator.  Variation uses simulated binary
crossover and polynomial mutation in continuous space, rounded half-up
and clamped so every child is a valid coding.  All randomness flows
through one ``SplitMix64`` stream, so a (config, evaluator, seed) triple
reproduces the archive bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .rng import SplitMix64


class EvaluationError(RuntimeError):
    """Raised when the evaluator fails; carries the offending coding."""

    def __init__(self, subnet_index: int, genes: tuple[int, ...], cause: Exception):
        super().__init__(f"evaluator failed on subnet {subnet_index} genes {list(genes)}: {cause}")
        self.subnet_index = subnet_index
        self.genes = genes
        self.cause = cause


@dataclass(frozen=True)
class Objectives:
    params: float
    error: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.params, self.error)


@dataclass
class Individual:
    subnet_index: int
    genes: tuple[int, ...]
    objectives: Objectives | None = None
    rank: int | None = None
    crowding: float | None = None


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int
    offspring_per_iteration: int
    iterations: int
    eta_crossover: float = 20.0
    eta_mutation: float = 20.0
    mutation_prob: float | None = None  # default 1/genome_length
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.offspring_per_iteration < 1 or self.iterations < 0:
            raise ValueError("offspring and iterations must be nonnegative")


@dataclass(frozen=True)
class SubnetContext:
    """What the engine needs to know about one sub-network's search space."""

    subnet_index: int
    bounds: tuple[int, ...]  # original width at each prunable position
    params_of: Callable[[tuple[int, ...]], float]


@dataclass(frozen=True)
class OptimizationResult:
    first_front: tuple[Individual, ...]
    archive: tuple[Individual, ...]
    evaluations: int


def dominates(a: Objectives, b: Objectives) -> bool:
    """Pareto dominance with both objectives minimized."""
    at, bt = a.as_tuple(), b.as_tuple()
    return all(x <= y for x, y in zip(at, bt)) and any(x < y for x, y in zip(at, bt))


def fast_nondominated_sort(pop: Sequence[Individual]) -> list[list[Individual]]:
    """Deb's fast non-dominated sort; sets ``rank`` on every individual."""
    n = len(pop)
    dominated: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(pop[p].objectives, pop[q].objectives):
                dominated[p].append(q)
            elif dominates(pop[q].objectives, pop[p].objectives):
                counts[p] += 1
        if counts[p] == 0:
            pop[p].rank = 0
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt: list[int] = []
        for p in fronts[i]:
            for q in dominated[p]:
                counts[q] -= 1
                if counts[q] == 0:
                    pop[q].rank = i + 1
                    nxt.append(q)
        i += 1
        fronts.append(nxt)
    return [[pop[i] for i in front] for front in fronts if front]


def crowding_distance(front: Sequence[Individual]) -> list[float]:
    """Crowding distances aligned with the input order; sets ``crowding``.

    Boundary individuals per objective get infinity; a degenerate
    objective range contributes 0 instead of dividing by zero.
    """
    n = len(front)
    if n == 0:
        raise ValueError("front must be non-empty")
    dist = [0.0] * n
    for m in range(2):
        order = sorted(range(n), key=lambda i: front[i].objectives.as_tuple()[m])
        lo = front[order[0]].objectives.as_tuple()[m]
        hi = front[order[-1]].objectives.as_tuple()[m]
        dist[order[0]] = dist[order[-1]] = math.inf
        if hi > lo:
            for k in range(1, n - 1):
                prev = front[order[k - 1]].objectives.as_tuple()[m]
                nxt = front[order[k + 1]].objectives.as_tuple()[m]
                dist[order[k]] += (nxt - prev) / (hi - lo)
    for i, d in enumerate(dist):
        front[i].crowding = d
    return dist


def _round_clamp(x: float, bound: int) -> int:
    return min(bound, max(1, math.floor(x + 0.5)))


def sbx_integer(p1: Sequence[int], p2: Sequence[int], bounds: Sequence[int],
                eta_c: float, rng: SplitMix64) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Simulated binary crossover per gene, rounded half-up and clamped."""
    if not (len(p1) == len(p2) == len(bounds)):
        raise ValueError("parent/bound lengths differ")
    c1: list[int] = []
    c2: list[int] = []
    for a, b, bound in zip(p1, p2, bounds):
        u = rng.random()
        if u <= 0.5:
            beta = (2.0 * u) ** (1.0 / (eta_c + 1.0))
        else:
            beta = (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta_c + 1.0))
        x1 = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b)
        x2 = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b)
        c1.append(_round_clamp(x1, bound))
        c2.append(_round_clamp(x2, bound))
    return tuple(c1), tuple(c2)


def poly_mutate_integer(genes: Sequence[int], bounds: Sequence[int], eta_m: float,
                        prob: float, rng: SplitMix64) -> tuple[int, ...]:
    """Bounded polynomial mutation per gene with probability ``prob``."""
    out: list[int] = []
    for x, bound in zip(genes, bounds):
        if rng.random() >= prob or bound <= 1:
            out.append(x)
            continue
        span = bound - 1
        d1 = (x - 1) / span
        d2 = (bound - x) / span
        u = rng.random()
        exp = 1.0 / (eta_m + 1.0)
        if u < 0.5:
            dq = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta_m + 1.0)) ** exp - 1.0
        else:
            dq = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta_m + 1.0)) ** exp
        out.append(_round_clamp(x + dq * span, bound))
    return tuple(out)


def _selection_key(ind: Individual) -> tuple:
    # equal rank and crowding: lexicographically smaller coding wins
    return (ind.rank, -ind.crowding, ind.genes)


def _tournament(pop: Sequence[Individual], rng: SplitMix64) -> Individual:
    a = pop[rng.randint(0, len(pop) - 1)]
    b = pop[rng.randint(0, len(pop) - 1)]
    return min(a, b, key=_selection_key)


def _rank_population(pop: Sequence[Individual]) -> list[list[Individual]]:
    fronts = fast_nondominated_sort(pop)
    for front in fronts:
        crowding_distance(front)
    return fronts


def pareto_front(pop: Sequence[Individual]) -> list[Individual]:
    """Brute-force non-dominated subset, deduplicated by genes."""
    unique: dict[tuple[int, ...], Individual] = {}
    for ind in pop:
        unique.setdefault(ind.genes, ind)
    members = list(unique.values())
    front = [p for p in members
             if not any(dominates(q.objectives, p.objectives) for q in members)]
    front.sort(key=lambda ind: ind.objectives.as_tuple() + ind.genes)
    return front


def evolve(ctx: SubnetContext, config: EvolutionConfig,
           evaluator: Callable[[int, tuple[int, ...]], float],
           rng: SplitMix64 | None = None) -> OptimizationResult:
    """Run a mu+lambda NSGA-II search over one sub-network's codings.

    The initial population always contains the unpruned baseline coding,
    so its objective pair is available as the impairment-ranking anchor.
    """
    if rng is None:
        rng = SplitMix64(config.seed)
    bounds = ctx.bounds
    mut_prob = (config.mutation_prob if config.mutation_prob is not None
                else 1.0 / max(1, len(bounds)))

    def make(genes: tuple[int, ...]) -> Individual:
        try:
            error = evaluator(ctx.subnet_index, genes)
        except Exception as exc:  # noqa: BLE001 - attach the coding and re-raise
            raise EvaluationError(ctx.subnet_index, genes, exc) from exc
        if not math.isfinite(error):
            raise EvaluationError(ctx.subnet_index, genes,
                                  ValueError(f"non-finite error {error!r}"))
        return Individual(ctx.subnet_index, genes,
                          Objectives(float(ctx.params_of(genes)), float(error)))

    codings = [tuple(bounds)]
    while len(codings) < config.population_size:
        codings.append(tuple(rng.randint(1, b) for b in bounds))
    population = [make(genes) for genes in codings]
    archive: list[Individual] = list(population)
    _rank_population(population)

    for _ in range(config.iterations):
        offspring: list[Individual] = []
        while len(offspring) < config.offspring_per_iteration:
            p1 = _tournament(population, rng)
            p2 = _tournament(population, rng)
            children = sbx_integer(p1.genes, p2.genes, bounds, config.eta_crossover, rng)
            for child in children:
                if len(offspring) >= config.offspring_per_iteration:
                    break
                mutated = poly_mutate_integer(child, bounds, config.eta_mutation,
                                              mut_prob, rng)
                offspring.append(make(mutated))
        archive.extend(offspring)
        combined = population + offspring
        fronts = _rank_population(combined)
        population = []
        for front in fronts:
            if len(population) + len(front) <= config.population_size:
                population.extend(front)
            else:
                remaining = config.population_size - len(population)
                front.sort(key=_selection_key)
                population.extend(front[:remaining])
                break

    return OptimizationResult(tuple(pareto_front(archive)), tuple(archive),
                              len(archive))
