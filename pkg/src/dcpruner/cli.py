"""Command-line front door.

Subcommands mirror the pipeline stages::

    dcpruner space      search-space accounting for a preset
    dcpruner partition  print the sub-network partition
    dcpruner optimize   run the per-sub-network searches
    dcpruner rank       fuse fronts into the global ranking
    dcpruner plan       plan schemes for target pruning rates
    dcpruner report     render the plan report
    dcpruner run        all stages end to end

Exit codes: 0 ok, 2 config error, 3 stage failure, 4 target unreached.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import arch as archmod
from . import pipeline, spaces

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_UNREACHED = 4


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="declarative run file (JSON)")
    parser.add_argument("--preset", choices=archmod.PRESET_NAMES)
    parser.add_argument("--num-classes", type=int, dest="num_classes")
    parser.add_argument("--input-size", type=int, dest="input_size")
    parser.add_argument("--population", type=int, dest="population_size")
    parser.add_argument("--offspring", type=int)
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--mutation-prob", type=float, dest="mutation_prob")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--evaluator", choices=["surrogate", "external"])
    parser.add_argument("--base-error", type=float, dest="base_error")
    parser.add_argument("--jitter", type=float)
    parser.add_argument("--worker-cmd", nargs=argparse.REMAINDER, dest="worker_cmd",
                        help="argv of the external trainer worker")
    parser.add_argument("--direction", choices=["ascending", "descending"],
                        dest="ranking_direction")
    parser.add_argument("--target-pr", type=float, action="append", dest="targets",
                        help="target pruning rate; repeatable")
    parser.add_argument("--serial", action="store_true",
                        help="run sub-network searches one at a time")
    parser.add_argument("--out", dest="out_dir", help="run directory")


def _build_config(args: argparse.Namespace) -> pipeline.RunConfig:
    raw: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    for key in pipeline.RunConfig.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "serial", False):
        raw["parallel"] = False
    cfg = pipeline.RunConfig.from_json(raw)
    return cfg


def _cmd_space(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    spec = archmod.build_preset(cfg.preset, cfg.num_classes, cfg.input_size)
    part = archmod.partition_by_resolution(spec)
    evo = cfg.evolution_config()
    report = spaces.space_report(spec, part, evo.population_size,
                                 evo.offspring_per_iteration, evo.iterations)
    print(f"{'whole space':>14}: {report.whole_space}")
    print(f"{'divided space':>14}: {report.divided_space}")
    print(f"{'reachable':>14}: {report.reachable}")
    print(f"{'summary':>14}: {report.magnitude_summary}")
    if args.json_out:
        args.json_out.write_text(json.dumps(report.to_json(), indent=2) + "\n")
    return EXIT_OK


def _cmd_partition(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    spec = archmod.build_preset(cfg.preset, cfg.num_classes, cfg.input_size)
    part = archmod.partition_by_resolution(spec)
    base_params, base_flops = archmod.network_cost(spec, part)
    print(f"{spec.name}: {len(spec.blocks)} blocks, {part.num_subnets} sub-networks, "
          f"{base_params} params, {base_flops} flops")
    for i, (start, stop) in enumerate(part.ranges):
        genes = archmod.gene_bounds(spec, part, i)
        print(f"  subnet {i}: blocks [{start}, {stop}), {len(genes)} genes, "
              f"bounds {list(genes)}")
    return EXIT_OK


def _run_stages(cfg: pipeline.RunConfig) -> Path:
    return pipeline.run_pipeline(cfg)


def _cmd_optimize(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    run_dir = Path(cfg.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    pipeline._stage_arch(cfg, run_dir)
    pipeline._stage_partition(run_dir)
    pipeline._stage_optimize(cfg, run_dir)
    print(f"fronts written to {run_dir}")
    return EXIT_OK


def _cmd_rank(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    run_dir = Path(cfg.out_dir)
    pipeline._stage_rank(cfg, run_dir)
    print(f"ranking written to {run_dir / 'ranking.json'}")
    return EXIT_OK


def _cmd_plan(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    schemes, report = pipeline.plan_and_report(Path(cfg.out_dir), cfg.targets)
    print(report, end="")
    if any(not s.reached for s in schemes.values()):
        return EXIT_UNREACHED
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    report_path = Path(_build_config(args).out_dir) / "report.txt"
    if not report_path.exists():
        print("no report yet; run `dcpruner plan` first", file=sys.stderr)
        return EXIT_STAGE
    print(report_path.read_text(), end="")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    run_dir = _run_stages(cfg)
    schemes, report = pipeline.plan_and_report(run_dir, cfg.targets)
    print(report, end="")
    if any(not s.reached for s in schemes.values()):
        return EXIT_UNREACHED
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dcpruner",
        description="Divide-and-conquer evolutionary pruning planner")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "space": _cmd_space,
        "partition": _cmd_partition,
        "optimize": _cmd_optimize,
        "rank": _cmd_rank,
        "plan": _cmd_plan,
        "report": _cmd_report,
        "run": _cmd_run,
    }
    for name, handler in commands.items():
        p = sub.add_parser(name)
        _add_config_args(p)
        if name == "space":
            p.add_argument("--json-out", type=Path)
        p.set_defaults(handler=handler)
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except pipeline.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except pipeline.StageFailure as exc:
        print(f"{exc}", file=sys.stderr)
        return EXIT_STAGE
    except FileNotFoundError as exc:
        print(f"{exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
