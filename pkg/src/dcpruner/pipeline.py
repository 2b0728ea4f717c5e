"""Run orchestration: staged artifacts, resumability, and planning reports.

A run directory holds one JSON artifact per stage (architecture,
partition, per-sub-network fronts, ranking, schemes).  Every stage
records a content hash of its inputs; rerunning skips stages whose
inputs are unchanged, and all writes are atomic (temp file + rename) so
a failed stage never corrupts earlier artifacts.  In surrogate mode a
(config, seed) pair reproduces the run directory bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence

from . import arch as archmod
from . import planner, spaces
from .evaluators import (CachedEvaluator, SurrogateEvaluator, SurrogateParams,
                         WorkerClient)
from .nsga2 import EvolutionConfig, SubnetContext, evolve
from .rng import SplitMix64, subseed

log = logging.getLogger(__name__)

FRONT_FORMAT_VERSION = "1"
RANKING_FORMAT_VERSION = "1"
SCHEME_FORMAT_VERSION = "1"


class ConfigError(ValueError):
    """The run configuration is invalid."""


class StageFailure(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


#: Table-style search profiles keyed by sub-network count of the preset.
SEARCH_PROFILES = {
    "resnet56": (40, 20, 7),
    "resnet110": (40, 20, 7),
    "resnet50": (20, 10, 5),
    "vgg16": (20, 10, 5),
}


@dataclass
class RunConfig:
    preset: str = "resnet56"
    num_classes: int = 10
    input_size: int = 32
    population_size: int | None = None   # None: preset profile
    offspring: int | None = None
    iterations: int | None = None
    eta_crossover: float = 20.0
    eta_mutation: float = 20.0
    mutation_prob: float | None = None
    seed: int = 0
    evaluator: str = "surrogate"         # "surrogate" | "external"
    base_error: float = 0.30
    amplitude: float = 0.5
    linear: float = 0.05
    jitter: float = 0.01
    worker_cmd: list[str] = field(default_factory=list)
    worker_timeout: float = 600.0
    ranking_direction: str = "ascending"
    targets: list[float] = field(default_factory=lambda: [0.5])
    parallel: bool = True
    out_dir: str = "run"

    def validate(self) -> None:
        if self.preset not in archmod.PRESET_NAMES:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.num_classes < 2:
            raise ConfigError("num_classes must be >= 2")
        if self.evaluator not in ("surrogate", "external"):
            raise ConfigError(f"unknown evaluator {self.evaluator!r}")
        if self.evaluator == "external" and not self.worker_cmd:
            raise ConfigError("external evaluator requires worker_cmd")
        if self.ranking_direction not in ("ascending", "descending"):
            raise ConfigError(f"unknown ranking direction {self.ranking_direction!r}")
        for t in self.targets:
            if not 0.0 <= t < 1.0:
                raise ConfigError(f"target pruning rate {t} outside [0, 1)")
        if not 0.0 < self.base_error < 1.0:
            raise ConfigError("base_error must lie in (0, 1)")

    def evolution_config(self) -> EvolutionConfig:
        profile = SEARCH_PROFILES[self.preset]
        return EvolutionConfig(
            population_size=self.population_size or profile[0],
            offspring_per_iteration=self.offspring or profile[1],
            iterations=self.iterations if self.iterations is not None else profile[2],
            eta_crossover=self.eta_crossover,
            eta_mutation=self.eta_mutation,
            mutation_prob=self.mutation_prob,
            seed=self.seed,
        )

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**obj)
        cfg.validate()
        return cfg


# ---------------------------------------------------------------------------
# artifact helpers

def _dump_json(obj: dict) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _load_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _hash_inputs(*parts: bytes) -> str:
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part)
        digest.update(b"\x00")
    return digest.hexdigest()


def _stage_current(run_dir: Path, stage: str, input_hash: str,
                   outputs: Sequence[Path]) -> bool:
    stamp = run_dir / ".stamps" / f"{stage}.json"
    if not stamp.exists() or not all(p.exists() for p in outputs):
        return False
    try:
        return _load_json(stamp).get("input_hash") == input_hash
    except (OSError, ValueError):
        return False


def _write_stamp(run_dir: Path, stage: str, input_hash: str) -> None:
    stamps = run_dir / ".stamps"
    stamps.mkdir(exist_ok=True)
    _atomic_write(stamps / f"{stage}.json", _dump_json({"input_hash": input_hash}))


# ---------------------------------------------------------------------------
# stages

def _stage_arch(config: RunConfig, run_dir: Path) -> Path:
    out = run_dir / "arch.json"
    key = _hash_inputs(f"{config.preset}/{config.num_classes}/{config.input_size}".encode())
    if _stage_current(run_dir, "arch", key, [out]):
        return out
    spec = archmod.build_preset(config.preset, config.num_classes, config.input_size)
    _atomic_write(out, _dump_json(archmod.arch_to_json(spec)))
    _write_stamp(run_dir, "arch", key)
    return out


def _stage_partition(run_dir: Path) -> Path:
    arch_path = run_dir / "arch.json"
    out = run_dir / "partition.json"
    key = _hash_inputs(arch_path.read_bytes())
    if _stage_current(run_dir, "partition", key, [out]):
        return out
    spec = archmod.arch_from_json(_load_json(arch_path))
    part = archmod.partition_by_resolution(spec)
    _atomic_write(out, _dump_json({
        "format_version": "1",
        "ranges": [list(r) for r in part.ranges],
    }))
    _write_stamp(run_dir, "partition", key)
    return out


def _load_arch_and_partition(run_dir: Path) -> tuple[archmod.ArchitectureSpec,
                                                     archmod.SubnetPartition]:
    spec = archmod.arch_from_json(_load_json(run_dir / "arch.json"))
    raw = _load_json(run_dir / "partition.json")
    part = archmod.SubnetPartition(tuple(tuple(r) for r in raw["ranges"]))
    return spec, part


def _build_evaluator(config: RunConfig, run_dir: Path,
                     spec: archmod.ArchitectureSpec,
                     part: archmod.SubnetPartition) -> tuple[CachedEvaluator, WorkerClient | None]:
    def subnet_params(subnet: int, genes: tuple[int, ...]) -> float:
        return archmod.subnet_cost(spec, part, archmod.PruneCoding(subnet, genes))[0]

    client: WorkerClient | None = None
    if config.evaluator == "surrogate":
        baselines = [subnet_params(i, archmod.encode_baseline(spec, part, i).genes)
                     for i in range(part.num_subnets)]
        inner = SurrogateEvaluator(
            SurrogateParams((config.base_error,) * part.num_subnets,
                            config.amplitude, config.linear, config.jitter,
                            config.seed),
            subnet_params, baselines)
    else:
        client = WorkerClient(worker_cmd=config.worker_cmd,
                              timeout=config.worker_timeout)
        inner = client.as_evaluator()
    return CachedEvaluator(inner, run_dir / "eval-cache.json"), client


def _stage_optimize(config: RunConfig, run_dir: Path) -> list[Path]:
    spec, part = _load_arch_and_partition(run_dir)
    evo = config.evolution_config()
    outputs = [run_dir / f"front_{i}.json" for i in range(part.num_subnets)]
    key = _hash_inputs(
        (run_dir / "arch.json").read_bytes(),
        (run_dir / "partition.json").read_bytes(),
        _dump_json(asdict(evo)),
        _dump_json({"evaluator": config.evaluator, "base_error": config.base_error,
                    "amplitude": config.amplitude, "linear": config.linear,
                    "jitter": config.jitter, "seed": config.seed,
                    "worker_cmd": config.worker_cmd}),
    )
    if _stage_current(run_dir, "optimize", key, outputs):
        return outputs

    evaluator, client = _build_evaluator(config, run_dir, spec, part)
    try:
        def search(subnet: int):
            bounds = archmod.gene_bounds(spec, part, subnet)
            ctx = SubnetContext(
                subnet, bounds,
                lambda genes, s=subnet: archmod.subnet_cost(
                    spec, part, archmod.PruneCoding(s, genes))[0])
            return evolve(ctx, evo, evaluator, SplitMix64(subseed(config.seed, subnet)))

        indices = list(range(part.num_subnets))
        if config.parallel and config.evaluator == "surrogate":
            with ThreadPoolExecutor(max_workers=part.num_subnets) as pool:
                results = list(pool.map(search, indices))
        else:
            results = [search(i) for i in indices]
    finally:
        if client is not None:
            client.close()

    for subnet, result in zip(indices, results):
        baseline_genes = archmod.gene_bounds(spec, part, subnet)
        baseline = next(ind for ind in result.archive if ind.genes == baseline_genes)
        payload = {
            "format_version": FRONT_FORMAT_VERSION,
            "subnet": subnet,
            "baseline": {"params": baseline.objectives.params,
                         "error": baseline.objectives.error},
            "solutions": [
                {"genes": list(ind.genes), "params": ind.objectives.params,
                 "error": ind.objectives.error}
                for ind in result.first_front
            ],
        }
        _atomic_write(outputs[subnet], _dump_json(payload))
    evaluator.save()
    _write_stamp(run_dir, "optimize", key)
    return outputs


def _stage_rank(config: RunConfig, run_dir: Path) -> Path:
    spec, part = _load_arch_and_partition(run_dir)
    front_paths = [run_dir / f"front_{i}.json" for i in range(part.num_subnets)]
    out = run_dir / "ranking.json"
    key = _hash_inputs(*[p.read_bytes() for p in front_paths],
                       config.ranking_direction.encode())
    if _stage_current(run_dir, "rank", key, [out]):
        return out
    fronts: dict[int, list[planner.FrontSolution]] = {}
    baselines: dict[int, tuple[float, float]] = {}
    for path in front_paths:
        raw = _load_json(path)
        subnet = raw["subnet"]
        fronts[subnet] = [
            planner.FrontSolution(subnet, tuple(s["genes"]), s["params"], s["error"])
            for s in raw["solutions"]
        ]
        baselines[subnet] = (raw["baseline"]["params"], raw["baseline"]["error"])
    ranked = planner.rank_fronts(fronts, baselines, config.ranking_direction)
    payload = {"format_version": RANKING_FORMAT_VERSION,
               "direction": config.ranking_direction}
    payload.update(planner.ranking_to_json(ranked))
    _atomic_write(out, _dump_json(payload))
    _write_stamp(run_dir, "rank", key)
    return out


def run_pipeline(config: RunConfig) -> Path:
    """Run all search stages; returns the run directory.

    Stages run in order (arch, partition, optimize, rank) and each is
    skipped when its recorded input hash matches.  A failing stage
    raises ``StageFailure`` and leaves earlier artifacts intact.
    """
    config.validate()
    run_dir = Path(config.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    for stage, fn in (("arch", lambda: _stage_arch(config, run_dir)),
                      ("partition", lambda: _stage_partition(run_dir)),
                      ("optimize", lambda: _stage_optimize(config, run_dir)),
                      ("rank", lambda: _stage_rank(config, run_dir))):
        try:
            fn()
        except StageFailure:
            raise
        except Exception as exc:
            raise StageFailure(stage, exc) from exc
    return run_dir


# ---------------------------------------------------------------------------
# planning and reporting

def scheme_filename(target_pr: float) -> str:
    return f"scheme_{target_pr:g}.json"


def plan_targets(run_dir: Path, targets: Sequence[float],
                 ) -> dict[float, planner.JointScheme]:
    """Plan one scheme per target from the persisted ranking.

    Pure replanning: no evaluator calls are made.  Raises if the ranking
    artifact is missing.
    """
    ranking_path = Path(run_dir) / "ranking.json"
    if not ranking_path.exists():
        raise FileNotFoundError(f"{ranking_path} missing; run the rank stage first")
    spec, part = _load_arch_and_partition(Path(run_dir))
    ranked = planner.ranking_from_json(_load_json(ranking_path))
    schemes: dict[float, planner.JointScheme] = {}
    for target in targets:
        scheme = planner.plan_for_architecture(spec, part, ranked, target)
        payload = {"format_version": SCHEME_FORMAT_VERSION, "target_pr": target}
        payload.update(planner.scheme_to_json(scheme))
        _atomic_write(Path(run_dir) / scheme_filename(target), _dump_json(payload))
        schemes[target] = scheme
    return schemes


def _format_count(value: float) -> str:
    if value >= 1e9:
        return f"{value / 1e9:.2f}G"
    if value >= 1e6:
        return f"{value / 1e6:.2f}M"
    return f"{value / 1e3:.1f}K"


def render_report(run_dir: Path, schemes: dict[float, planner.JointScheme]) -> str:
    """Tabular summary of planned schemes.

    The error column is a surrogate-side estimate (mean of the selected
    per-sub-network errors), not a trained-network accuracy.
    """
    fronts: dict[int, dict] = {}
    spec, part = _load_arch_and_partition(Path(run_dir))
    for i in range(part.num_subnets):
        fronts[i] = _load_json(Path(run_dir) / f"front_{i}.json")

    def estimated_error(scheme: planner.JointScheme) -> float:
        errors = []
        for subnet, genes in scheme.selections.items():
            raw = fronts[subnet]
            if genes is None:
                errors.append(raw["baseline"]["error"])
            else:
                match = next(s for s in raw["solutions"] if tuple(s["genes"]) == genes)
                errors.append(match["error"])
        return sum(errors) / len(errors)

    header = (f"{'Target':>8} {'Err*':>8} {'Params':>10} {'FLOPs':>10} "
              f"{'PR-P(%)':>8} {'PR-F(%)':>8} {'Reached':>8}")
    lines = [f"Pruning plan for {spec.name} ({spec.num_classes} classes)", header,
             "-" * len(header)]
    for target in sorted(schemes):
        s = schemes[target]
        lines.append(
            f"{target:>8.2f} {estimated_error(s):>8.4f} "
            f"{_format_count(s.params):>10} {_format_count(s.flops):>10} "
            f"{100 * s.pr_params:>8.2f} {100 * s.pr_flops:>8.2f} "
            f"{'yes' if s.reached else 'NO':>8}")
    lines.append("")
    lines.append("Err* is the mean selected sub-network error from the run's "
                 "evaluator, not a trained-network accuracy.")
    return "\n".join(lines) + "\n"


def plan_and_report(run_dir: Path, targets: Sequence[float],
                    ) -> tuple[dict[float, planner.JointScheme], str]:
    schemes = plan_targets(run_dir, targets)
    report = render_report(Path(run_dir), schemes)
    _atomic_write(Path(run_dir) / "report.txt", report.encode("utf-8"))
    return schemes, report
