"""Paired Monte Carlo comparison of collision-inclusive and collision-exclusive planning.

Trial ``i`` of both modes seeds its generator with ``(seed, i)``. Every
planner iteration draws the same number of uniforms, so the two modes see
the same random stream. Records are ordered by (trial, mode, checkpoint) no
matter how trials are scheduled.
"""

from __future__ import annotations

import csv
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .artifacts import fmt
from .planner import Budget, Iterations, NodeKind, WallClock, plan
from .scenario import Scenario

MODES = ("inclusive", "exclusive")
CSV_HEADER = ("trial", "mode", "checkpoint_time", "best_traj_time", "tree_size")


@dataclass(frozen=True)
class BenchRecord:
    trial: int
    mode: str
    checkpoint_time: float  # in budget units: iterations or seconds
    best_traj_time: Optional[float]
    tree_size: int


@dataclass(frozen=True)
class TrialStats:
    trial: int
    mode: str
    iterations: int
    elapsed: float
    tree_size: int
    collision_nodes: int
    best_time: Optional[float]

    @property
    def collision_fraction(self) -> float:
        return self.collision_nodes / self.tree_size


@dataclass
class BenchResult:
    records: list
    stats: list
    budget: Budget
    checkpoints: tuple

    def final(self, mode: str) -> list:
        last = self.checkpoints[-1]
        return [r for r in self.records if r.mode == mode and r.checkpoint_time == last]


def run_trial(scenario: Scenario, trial: int, mode: str, budget: Budget, checkpoints, seed: int):
    cfg = scenario.config(inclusive=mode == "inclusive", budget=budget, seed=(seed, trial), checkpoints=checkpoints)
    result = plan(scenario, cfg)
    records = [BenchRecord(trial, mode, c.at, c.best_time, c.tree_size) for c in result.checkpoints]
    stats = TrialStats(
        trial, mode, result.iterations, result.elapsed, len(result.tree),
        result.tree.count(NodeKind.COLLISION), result.best_time,
    )
    return records, stats


def _job(args):
    return run_trial(*args)


def run_bench(
    scenario: Scenario,
    trials: int,
    budget: Budget,
    checkpoints: Sequence[float] = (),
    seed: int = 0,
    workers: int = 1,
    modes: Sequence[str] = MODES,
) -> BenchResult:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    marks = tuple(sorted(float(c) for c in checkpoints)) or (float(budget.amount),)
    jobs = [(scenario, t, m, budget, marks, seed) for t in range(trials) for m in modes]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outputs = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        outputs = [_job(j) for j in jobs]
    records = [r for recs, _ in outputs for r in recs]
    records.sort(key=lambda r: (r.trial, MODES.index(r.mode), r.checkpoint_time))
    return BenchResult(records, [s for _, s in outputs], budget, marks)


# ------------------------------------------------------------------ statistics


def median_time(values) -> float:
    """Median with unsolved trials counted as infinitely slow."""
    return statistics.median(math.inf if v is None else v for v in values)


def sign_test(better: int, worse: int) -> float:
    """One-sided exact sign test p-value for ``better`` wins out of ``better + worse``."""
    n = better + worse
    if n == 0:
        return 1.0
    return sum(math.comb(n, k) for k in range(better, n + 1)) / 2.0**n


def paired_counts(result: BenchResult) -> tuple[int, int, int]:
    """(inclusive faster, exclusive faster, ties) at the final checkpoint."""
    inc = {r.trial: r.best_traj_time for r in result.final("inclusive")}
    exc = {r.trial: r.best_traj_time for r in result.final("exclusive")}
    better = worse = ties = 0
    for t in inc:
        a = math.inf if inc[t] is None else inc[t]
        b = math.inf if exc[t] is None else exc[t]
        if a < b:
            better += 1
        elif a > b:
            worse += 1
        else:
            ties += 1
    return better, worse, ties


def summary_rows(result: BenchResult) -> list[tuple]:
    rows = []
    for c in result.checkpoints:
        for mode in MODES:
            recs = [r for r in result.records if r.mode == mode and r.checkpoint_time == c]
            if not recs:
                continue
            solved = sum(r.best_traj_time is not None for r in recs)
            rows.append(
                (c, mode, median_time(r.best_traj_time for r in recs), statistics.median(r.tree_size for r in recs), solved, len(recs))
            )
    return rows


def summary_text(result: BenchResult, scenario_name: str) -> str:
    unit = "iterations" if isinstance(result.budget, Iterations) else "seconds"
    lines = [
        f"scenario: {scenario_name}",
        f"budget: {result.budget}",
        f"trials: {len({r.trial for r in result.records})}",
        f"checkpoint unit: {unit}",
        "",
        "checkpoint  mode       median_best_time  median_tree_size  solved",
    ]
    for c, mode, med_t, med_n, solved, n in summary_rows(result):
        lines.append(f"{fmt(c):>10}  {mode:<9}  {fmt(med_t):>16}  {fmt(med_n):>16}  {solved}/{n}")
    if {s.mode for s in result.stats} == set(MODES):
        better, worse, ties = paired_counts(result)
        lines += [
            "",
            "final checkpoint, paired by trial (unsolved counts as slowest):",
            f"  inclusive faster: {better}  exclusive faster: {worse}  ties: {ties}",
            f"  one-sided sign test p = {fmt(sign_test(better, worse))}",
        ]
    fractions = [s.collision_fraction for s in result.stats if s.mode == "inclusive"]
    if fractions:
        lines.append(f"median collision-node fraction (inclusive): {fmt(statistics.median(fractions))}")
    if isinstance(result.budget, WallClock):
        for mode in MODES:
            its = [s.iterations for s in result.stats if s.mode == mode]
            if its:
                lines.append(f"median iterations ({mode}): {fmt(statistics.median(its))}")
    return "\n".join(lines) + "\n"


def write_records(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.trial, r.mode, fmt(r.checkpoint_time), fmt(r.best_traj_time), r.tree_size])


def write_stats(stats, path, *, with_elapsed: bool) -> None:
    header = ["trial", "mode", "iterations", "tree_size", "collision_nodes", "collision_fraction", "best_time"]
    if with_elapsed:
        header.append("elapsed")
    ordered = sorted(stats, key=lambda s: (s.trial, MODES.index(s.mode)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s in ordered:
            row = [s.trial, s.mode, s.iterations, s.tree_size, s.collision_nodes, fmt(s.collision_fraction), fmt(s.best_time)]
            if with_elapsed:
                row.append(fmt(s.elapsed))
            w.writerow(row)


def write_bench(result: BenchResult, out_dir, scenario_name: str) -> dict:
    """Write ``bench.csv``, ``trials.csv`` and ``summary.txt``; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"records": out / "bench.csv", "trials": out / "trials.csv", "summary": out / "summary.txt"}
    write_records(result.records, paths["records"])
    write_stats(result.stats, paths["trials"], with_elapsed=isinstance(result.budget, WallClock))
    paths["summary"].write_text(summary_text(result, scenario_name))
    return paths


def calibrate(scenario: Scenario, seconds: float = 0.1, runs: int = 5, mode: str = "inclusive", seed: int = 0) -> int:
    """Median iteration count a mode completes in ``seconds`` of wall clock."""
    counts = [run_trial(scenario, t, mode, WallClock(seconds), (), seed)[1].iterations for t in range(runs)]
    return max(1, int(statistics.median(counts)))
