"""Fusing per-sub-network Pareto fronts into one joint pruning scheme.

Every front solution is scored by its impairment index: the extra
parameters it keeps (relative to the most-pruned solution of its own
sub-network's front) per unit of extra error.  Ranking all solutions by
that index gives a global order in which sub-network selections are
applied until the whole-network parameter pruning rate reaches the
requested target.  Replanning at a new target reuses the ranking; no
re-search is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import arch as archmod

GPII_EPSILON = 0.001


@dataclass(frozen=True)
class FrontSolution:
    subnet_index: int
    genes: tuple[int, ...]
    params: float
    error: float


@dataclass(frozen=True)
class DeltaRecord:
    solution: FrontSolution
    delta_p: float
    delta_e: float


@dataclass(frozen=True)
class ImpairmentEntry:
    delta: DeltaRecord
    gpii: float

    @property
    def solution(self) -> FrontSolution:
        return self.delta.solution


@dataclass(frozen=True)
class JointScheme:
    selections: dict[int, tuple[int, ...] | None]  # None = keep baseline
    params: float
    flops: float | None
    pr_params: float
    pr_flops: float | None
    reached: bool
    trace: tuple[ImpairmentEntry, ...]


def compute_deltas(front: Sequence[FrontSolution],
                   baseline: tuple[float, float]) -> list[DeltaRecord]:
    """Relative (params, error) change of each solution vs. the unpruned
    sub-network; the baseline solution itself maps to (0, 0)."""
    base_params, base_error = baseline
    if base_params <= 0:
        raise ValueError("baseline params must be positive")
    if base_error <= 0:
        raise ValueError(
            "baseline error must be positive: the relative error change divides by it")
    return [
        DeltaRecord(sol,
                    (sol.params - base_params) / base_params,
                    (sol.error - base_error) / base_error)
        for sol in front
    ]


def compute_gpii(groups: dict[int, Sequence[DeltaRecord]]) -> list[ImpairmentEntry]:
    """Impairment index per solution, with minima taken within each
    sub-network's own front."""
    entries: list[ImpairmentEntry] = []
    for subnet in sorted(groups):
        deltas = groups[subnet]
        if not deltas:
            raise ValueError(f"empty front group for subnet {subnet}")
        min_dp = min(d.delta_p for d in deltas)
        min_de = min(d.delta_e for d in deltas)
        for d in deltas:
            gpii = (d.delta_p - min_dp) / (d.delta_e - min_de + GPII_EPSILON)
            entries.append(ImpairmentEntry(d, gpii))
    return entries


def _tie_key(entry: ImpairmentEntry) -> tuple:
    return (entry.delta.delta_e, entry.solution.subnet_index, entry.solution.genes)


def rank(entries: Sequence[ImpairmentEntry],
         direction: str = "ascending") -> list[ImpairmentEntry]:
    """Deterministic ordering by impairment index.

    Ascending applies the most-pruned solutions first and is the default;
    descending yields a monotone pruning-rate curve instead.  Ties break
    by smaller error change, then subnet index, then genes.
    """
    if direction not in ("ascending", "descending"):
        raise ValueError(f"unknown ranking direction {direction!r}")
    ordered = sorted(entries, key=lambda e: (e.gpii,) + _tie_key(e))
    if direction == "descending":
        ordered = sorted(ordered, key=lambda e: -e.gpii)
    return ordered


def build_scheme(ranked: Sequence[ImpairmentEntry],
                 subnet_baseline_params: Sequence[float],
                 target_pr: float,
                 fixed_params: float = 0.0) -> JointScheme:
    """Walk the ranking until the parameter pruning rate meets the target.

    Starts from the all-baseline scheme, repeatedly overwrites one
    sub-network's selection with the next ranked entry and stops as soon
    as the whole-network parameter pruning rate reaches ``target_pr``.
    An exhausted ranking returns the best-achieved scheme flagged as
    unreached.  ``fixed_params`` covers never-pruned parts (stem, head).
    """
    if not 0.0 <= target_pr < 1.0:
        raise ValueError(f"target pruning rate {target_pr} outside [0, 1)")
    baselines = [float(p) for p in subnet_baseline_params]
    total_baseline = fixed_params + sum(baselines)
    current = list(baselines)
    selections: dict[int, tuple[int, ...] | None] = {
        i: None for i in range(len(baselines))}
    trace: list[ImpairmentEntry] = []

    def rate() -> float:
        return 1.0 - (fixed_params + sum(current)) / total_baseline

    def snapshot(reached: bool) -> JointScheme:
        return JointScheme(dict(selections), fixed_params + sum(current), None,
                           rate(), None, reached, tuple(trace))

    best = snapshot(False)
    if rate() >= target_pr:
        return snapshot(True)
    for entry in ranked:
        sol = entry.solution
        selections[sol.subnet_index] = sol.genes
        current[sol.subnet_index] = sol.params
        trace.append(entry)
        if rate() >= target_pr:
            return snapshot(True)
        if rate() > best.pr_params:
            best = snapshot(False)
    # ranking exhausted: a later entry can overwrite a more-pruned selection
    # and lower the rate again, so return the best state seen
    return best


def rank_fronts(fronts: dict[int, Sequence[FrontSolution]],
                baselines: dict[int, tuple[float, float]],
                direction: str = "ascending") -> list[ImpairmentEntry]:
    """Deltas, impairment indices and ranking in one step."""
    groups = {
        subnet: compute_deltas(front, baselines[subnet])
        for subnet, front in fronts.items()
    }
    return rank(compute_gpii(groups), direction)


def plan_for_architecture(architecture: archmod.ArchitectureSpec,
                          part: archmod.SubnetPartition,
                          ranked: Sequence[ImpairmentEntry],
                          target_pr: float) -> JointScheme:
    """Architecture-aware planning: fills in FLOPs and both pruning rates
    recomputed from the decoded whole network."""
    baselines = [
        archmod.subnet_cost(architecture, part,
                            archmod.encode_baseline(architecture, part, i))[0]
        for i in range(part.num_subnets)
    ]
    fixed = archmod.fixed_cost(architecture)[0]
    scheme = build_scheme(ranked, baselines, target_pr, fixed_params=fixed)
    params, flops = archmod.network_cost(architecture, part, scheme.selections)
    pr_flops, pr_params = archmod.pruning_rates(architecture, part, scheme.selections)
    if not math.isclose(pr_params, scheme.pr_params, abs_tol=1e-9):
        raise RuntimeError("planned and recomputed parameter rates disagree")
    return JointScheme(scheme.selections, float(params), float(flops),
                       pr_params, pr_flops, scheme.reached, scheme.trace)


# ---------------------------------------------------------------------------
# JSON serialization

def ranking_to_json(entries: Sequence[ImpairmentEntry]) -> dict:
    return {
        "entries": [
            {
                "subnet": e.solution.subnet_index,
                "genes": list(e.solution.genes),
                "params": e.solution.params,
                "error": e.solution.error,
                "delta_p": e.delta.delta_p,
                "delta_e": e.delta.delta_e,
                "gpii": e.gpii,
            }
            for e in entries
        ]
    }


def ranking_from_json(obj: dict) -> list[ImpairmentEntry]:
    return [
        ImpairmentEntry(
            DeltaRecord(
                FrontSolution(raw["subnet"], tuple(raw["genes"]),
                              raw["params"], raw["error"]),
                raw["delta_p"], raw["delta_e"]),
            raw["gpii"])
        for raw in obj["entries"]
    ]


def scheme_to_json(scheme: JointScheme) -> dict:
    return {
        "selections": {
            str(subnet): (list(genes) if genes is not None else None)
            for subnet, genes in sorted(scheme.selections.items())
        },
        "totals": {"params": scheme.params, "flops": scheme.flops},
        "rates": {"pr_params": scheme.pr_params, "pr_flops": scheme.pr_flops},
        "reached": scheme.reached,
        "trace": [
            {"subnet": e.solution.subnet_index, "genes": list(e.solution.genes)}
            for e in scheme.trace
        ],
    }
