"""Command-line entry point: ``plan``, ``bench``, ``export`` and ``calibrate``.

Exit codes: 0 success, 1 usage error, 2 no trajectory, 3 invalid scenario,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, kernels
from .artifacts import dense_rows, fmt, load_trajectory, result_to_dict, write_json, write_samples
from .bench import calibrate, run_bench, write_bench
from .planner import parse_budget, plan
from .scenario import ScenarioError, load

EXIT_OK, EXIT_USAGE, EXIT_NO_TRAJECTORY, EXIT_SCENARIO, EXIT_IO = 0, 1, 2, 3, 4
SAMPLE_RATE_HZ = 1000.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _budget(text):
    try:
        return parse_budget(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _checkpoints(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad checkpoint list {text!r}") from None


def _positive_rate(text):
    try:
        rate = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rate {text!r}") from None
    if not rate > 0:
        raise argparse.ArgumentTypeError(f"rate must be positive, got {text}")
    return rate


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cirrt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="run one planning episode")
    p.add_argument("scenario", help="scenario file, or a bundled name (tunnel, hop, spheres3d)")
    p.add_argument("--mode", choices=("inclusive", "exclusive"), default="inclusive")
    p.add_argument("--budget", type=_budget, default=parse_budget("iters:1000"), help="iters:N or wall:SECONDS")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoints", type=_checkpoints, default=(), help="comma-separated, in budget units")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    b = sub.add_parser("bench", help="paired inclusive/exclusive Monte Carlo trials")
    b.add_argument("scenario")
    b.add_argument("--trials", type=int, default=200)
    b.add_argument("--budget", type=_budget, default=parse_budget("iters:300"))
    b.add_argument("--checkpoints", type=_checkpoints, default=(), help="comma-separated, in budget units")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1, help="worker processes; output does not depend on it")
    b.add_argument("--out", type=Path, required=True)

    e = sub.add_parser("export", help="dense CSV samples of a planned trajectory")
    e.add_argument("result", type=Path, help="trajectory.json written by plan")
    e.add_argument("--rate", type=_positive_rate, required=True, help="samples per second")
    e.add_argument("--out", type=Path, required=True)

    c = sub.add_parser("calibrate", help="iterations completed in a wall-clock budget")
    c.add_argument("scenario")
    c.add_argument("--seconds", type=float, default=0.1)
    c.add_argument("--runs", type=int, default=5)
    c.add_argument("--mode", choices=("inclusive", "exclusive"), default="inclusive")
    return parser


def cmd_plan(args) -> int:
    scenario = load(args.scenario)
    try:
        cfg = scenario.config(
            inclusive=args.mode == "inclusive", budget=args.budget, seed=args.seed, checkpoints=args.checkpoints
        )
    except ValueError as exc:
        print(f"cirrt plan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    result = plan(scenario, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    data = result_to_dict(result, scenario=scenario.name, mode=args.mode, seed=args.seed, budget=str(args.budget))
    write_json(data, args.out / "trajectory.json")
    if result.solved:
        write_samples(dense_rows(result.trajectory(), SAMPLE_RATE_HZ), args.out / "samples.csv")
    lines = [
        f"scenario: {scenario.name}",
        f"mode: {args.mode}",
        f"seed: {args.seed}",
        f"budget: {args.budget}",
        f"kernels: {kernels.BACKEND}",
        f"solved: {'yes' if result.solved else 'no'}",
        f"best_time: {fmt(result.best_time)}",
        f"tree_size: {len(result.tree)}",
        f"collision_nodes: {data['collision_nodes']}",
        f"impacts_on_best: {len(data['impacts'])}",
        f"iterations: {result.iterations}",
        f"elapsed: {fmt(result.elapsed)}",
    ]
    lines += [f"{k}: {v}" for k, v in result.counters.items()]
    (args.out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines[:10]))
    if not result.solved:
        print("cirrt plan: no trajectory found within the budget", file=sys.stderr)
        return EXIT_NO_TRAJECTORY
    return EXIT_OK


def cmd_bench(args) -> int:
    scenario = load(args.scenario)
    try:
        result = run_bench(scenario, args.trials, args.budget, args.checkpoints, args.seed, args.workers)
    except ValueError as exc:
        print(f"cirrt bench: {exc}", file=sys.stderr)
        return EXIT_USAGE
    paths = write_bench(result, args.out, scenario.name)
    sys.stdout.write(paths["summary"].read_text())
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        traj = load_trajectory(args.result)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"cirrt export: {args.result}: {exc}", file=sys.stderr)
        return EXIT_NO_TRAJECTORY
    rows = dense_rows(traj, args.rate)
    write_samples(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    n = calibrate(load(args.scenario), args.seconds, args.runs, args.mode)
    print(f"{args.mode} mode completes a median of {n} iterations in {args.seconds:g} s ({kernels.BACKEND} kernels)")
    print(f"suggested budget: iters:{n}")
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "bench": cmd_bench, "export": cmd_export, "calibrate": cmd_calibrate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"cirrt {args.command}: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except OSError as exc:
        print(f"cirrt {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
