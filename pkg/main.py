import argparse
import csv
import io
import json
import logging
import signal
import statistics
import sys
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from errors import (
    InstanceSyntaxError, InstanceValidationError, OutOfRangeError, RegretError,
    ScenarioError, UsageError
)
from evacuation import cost, median
from models import CommandConfig, OutputFormat, PathNetwork, PointOnPath, Solution
from oracle import run_checks
from path_network import load_instance, locate, make_scenario, random_network
from regret_solver import build_table, regret_curve, solve
from scenario_space import universe

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_ORACLE = 3


class CommandParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; ours is 1"""

    def error(self, message):
        raise UsageError(message)


def number(x: float) -> float:
    """Round to the configured significant digits; -0.0 prints as 0"""
    return float(format(x, f".{Config.SIGNIFICANT_DIGITS}g")) + 0.0


def text_number(x: float) -> str:
    return format(number(x), f".{Config.SIGNIFICANT_DIGITS}g")


def locate_input(net: PathNetwork, at: float) -> PointOnPath:
    """
    Classify a coordinate given in the input embedding. Vertices are matched
    at output precision first, so any vertex coordinate this tool prints
    reads back as that vertex.
    """
    for i, v in enumerate(net.vertex_coordinates):
        if number(net.original(v)) == number(at):
            return PointOnPath.vertex(i + 1, v)
    return locate(net, at - net.offset)


def parse_weights(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as e:
        raise UsageError(f"--scenario expects comma-separated numbers: {e}") from e


def parse_sizes(text: str) -> List[int]:
    try:
        sizes = [int(part) for part in text.split(",")]
    except ValueError as e:
        raise UsageError(f"--n expects comma-separated integers: {e}") from e
    if any(size < 1 for size in sizes):
        raise UsageError("--n sizes must be positive")
    return sizes


def build_parser() -> CommandParser:
    common = CommandParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="More logging; repeat for debug")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], help="Output format")
    common.add_argument("--output", help="Write to this file instead of standard output")
    common.add_argument("--seed", type=int, default=Config.DEFAULT_SEED, help="Seed for random generation")

    parser = CommandParser(description="Minimax regret sink on dynamic path networks")
    commands = parser.add_subparsers(dest="subcommand", required=True)

    p = commands.add_parser("validate", parents=[common], help="Parse and validate an instance")
    p.add_argument("input")

    p = commands.add_parser("cost", parents=[common], help="Evacuation time of one scenario at a point")
    p.add_argument("input")
    p.add_argument("--scenario", required=True, help="Weights w1,...,wn")
    p.add_argument("--at", type=float, required=True, help="Sink coordinate")

    p = commands.add_parser("median", parents=[common], help="1-median of one scenario")
    p.add_argument("input")
    p.add_argument("--scenario", required=True, help="Weights w1,...,wn")

    p = commands.add_parser("scenarios", parents=[common], help="Dump the scenario universe")
    p.add_argument("input")

    p = commands.add_parser("solve", parents=[common], help="Minimax regret sink")
    p.add_argument("input")
    p.add_argument("--lp-method", choices=["envelope", "incremental"], default=None)
    p.add_argument("--streaming", action="store_true", help="Do not hold the full scenario table")
    p.add_argument("--workers", type=int, default=None, help="Process pool size")

    p = commands.add_parser("curve", parents=[common], help="Maximum regret sampled along the path")
    p.add_argument("input")
    p.add_argument("--samples", type=int, default=101)

    p = commands.add_parser("oracle-check", parents=[common], help="Cross-check the solver against brute force")
    p.add_argument("input")
    p.add_argument("--grid", type=int, default=Config.ORACLE_GRID, help="Weight grid points per interval")

    p = commands.add_parser("bench", parents=[common], help="Time solve on random instances")
    p.add_argument("--n", default="8,16,32,64", help="Comma-separated sizes")
    p.add_argument("--repeat", type=int, default=3, help="Instances per size")
    return parser


def command_config(args: argparse.Namespace) -> CommandConfig:
    default_format = OutputFormat.CSV if args.subcommand in ("curve", "bench") else OutputFormat.JSON
    return CommandConfig(
        subcommand=args.subcommand,
        input_path=getattr(args, "input", None),
        output_path=args.output,
        format=OutputFormat(args.format) if args.format else default_format,
        seed=args.seed,
        grid=getattr(args, "grid", Config.ORACLE_GRID),
        samples=getattr(args, "samples", 101),
        verbosity=args.verbose,
    )


def setup_logging(verbosity: int):
    if Config.DEBUG or verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, Config.LOG_LEVEL, logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def render_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([text_number(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def render_json(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2) + "\n"


def solution_document(net: PathNetwork, solution: Solution, members) -> Dict[str, Any]:
    witness: Dict[str, Any] = {
        "ref": solution.witness_ref,
        "weights": [number(w) for w in solution.worst_scenario.weights],
    }
    if solution.witness_ref is not None:
        member = members[solution.witness_ref]
        witness.update(
            anchor=member.anchor,
            side=member.spec.side.value,
            intermediate=member.spec.intermediate_index,
            weight=number(member.spec.intermediate_weight),
        )
    return {
        "x_star": {
            "coordinate": number(net.original(solution.x_star.coordinate)),
            "kind": solution.x_star.kind.value,
            "index": solution.x_star.index,
        },
        "value": number(solution.value),
        "witness": witness,
        "vertices": [
            {"index": r.index, "r_max": number(r.r_max), "witness_ref": r.witness_ref}
            for r in solution.vertex_report
        ],
        "edges": [
            {"index": e.index, "x": number(net.original(e.x)), "value": number(e.value)}
            for e in solution.edge_report
        ],
    }


def run_bench(config: CommandConfig, sizes: List[int], repeat: int) -> str:
    rows = []
    timings: Dict[int, List[float]] = {}
    for n in sizes:
        for r in range(repeat):
            seed = config.seed + r
            net = random_network(np.random.default_rng(seed), n)
            started = time.perf_counter()
            scenarios = universe(net)
            solve(net, scenarios=scenarios)
            seconds = time.perf_counter() - started
            timings.setdefault(n, []).append(seconds)
            rows.append((n, seed, len(scenarios), seconds))
            log.info("bench n=%d seed=%d: %.3fs", n, seed, seconds)
    table = render_csv(["n", "seed", "universe_size", "seconds"], rows)
    summary = render_csv(["n", "median_seconds"], [(n, statistics.median(t)) for n, t in timings.items()])
    return table + "\n" + summary


def execute(args: argparse.Namespace, config: CommandConfig) -> Tuple[int, str]:
    """Run one subcommand; returns (exit code, output text)"""
    if config.subcommand == "bench":
        return EXIT_OK, run_bench(config, parse_sizes(args.n), args.repeat)

    net = load_instance(config.input_path)
    csv_output = config.format == OutputFormat.CSV

    if config.subcommand == "validate":
        document = {"valid": True, "n": net.n, "length": number(net.length)}
        if csv_output:
            return EXIT_OK, render_csv(["valid", "n", "length"], [("true", net.n, net.length)])
        return EXIT_OK, render_json(document)

    elif config.subcommand == "cost":
        s = make_scenario(net, parse_weights(args.scenario))
        x = locate_input(net, args.at)
        value = cost(net, s, x)
        if csv_output:
            return EXIT_OK, render_csv(["x", "cost"], [(float(args.at), value)])
        return EXIT_OK, render_json({"x": number(args.at), "cost": number(value)})

    elif config.subcommand == "median":
        s = make_scenario(net, parse_weights(args.scenario))
        result = median(net, s)
        coordinate = net.original(net.vertex_coordinates[result.median_vertex_index - 1])
        if csv_output:
            return EXIT_OK, render_csv(
                ["vertex", "coordinate", "cost"],
                [(result.median_vertex_index, coordinate, result.median_cost)]
            )
        return EXIT_OK, render_json({
            "vertex": result.median_vertex_index,
            "coordinate": number(coordinate),
            "cost": number(result.median_cost),
        })

    elif config.subcommand == "scenarios":
        members = universe(net, args_workers(args)).members
        if csv_output:
            return EXIT_OK, render_csv(
                ["anchor", "side", "intermediate", "weight"],
                [(m.anchor, m.spec.side.value, m.spec.intermediate_index, m.spec.intermediate_weight)
                 for m in members]
            )
        return EXIT_OK, render_json({
            "size": len(members),
            "scenarios": [
                {
                    "anchor": m.anchor,
                    "side": m.spec.side.value,
                    "intermediate": m.spec.intermediate_index,
                    "weight": number(m.spec.intermediate_weight),
                    "weights": [number(w) for w in m.scenario.weights],
                }
                for m in members
            ],
        })

    elif config.subcommand == "solve":
        workers = args_workers(args)
        scenarios = universe(net, workers)
        solution = solve(
            net,
            lp_method=args.lp_method,
            streaming=True if args.streaming else None,
            workers=workers,
            scenarios=scenarios,
        )
        if csv_output:
            return EXIT_OK, render_csv(
                ["x_star", "value"], [(net.original(solution.x_star.coordinate), solution.value)]
            )
        return EXIT_OK, render_json(solution_document(net, solution, scenarios.members))

    elif config.subcommand == "curve":
        if config.samples < 1:
            raise UsageError("--samples must be at least 1")
        scenarios = universe(net)
        rows = regret_curve(net, scenarios, config.samples, build_table(net, scenarios))
        rows = [(net.original(x), r) for x, r in rows]
        if csv_output:
            return EXIT_OK, render_csv(["x", "r_max"], rows)
        return EXIT_OK, render_json({"curve": [{"x": number(x), "r_max": number(r)} for x, r in rows]})

    elif config.subcommand == "oracle-check":
        report = run_checks(net, seed=config.seed, weight_grid_points=config.grid)
        code = EXIT_OK if report.passed else EXIT_ORACLE
        if csv_output:
            return code, render_csv(
                ["check", "passed", "detail"],
                [(c.name, "true" if c.passed else "false", c.detail) for c in report.checks]
            )
        return code, render_json({
            "passed": report.passed,
            "checks": [c.model_dump() for c in report.checks],
        })

    raise UsageError(f"unknown subcommand {config.subcommand}")


def args_workers(args: argparse.Namespace) -> Optional[int]:
    workers = getattr(args, "workers", None)
    if workers is not None and workers < 1:
        raise UsageError("--workers must be at least 1")
    return workers


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    try:
        args = build_parser().parse_args(argv)
        config = command_config(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(config.verbosity)
    try:
        code, output = execute(args, config)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceSyntaxError, InstanceValidationError, ScenarioError, OutOfRangeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except RegretError as e:
        log.error("Command %s failed: %s", config.subcommand, e)
        return EXIT_USAGE

    if config.output_path:
        with open(config.output_path, "w", newline="") as f:
            f.write(output)
    else:
        sys.stdout.write(output)
    return code


if __name__ == "__main__":
    # Handle graceful shutdown
    def signal_handler(sig, frame):
        print("Shutting down...", file=sys.stderr)
        sys.exit(130)


    signal.signal(signal.SIGINT, signal_handler)
    sys.exit(run())
