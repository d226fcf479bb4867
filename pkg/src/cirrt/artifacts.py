"""Result artifacts: the trajectory JSON file and dense sample tables.

Floats in JSON and in sample tables are written with full round-trip
precision, so exported samples reproduce ``evaluate`` exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Optional, Union

from .geometry import Vec3
from .planner import Impact, NodeKind, PlanResult, Segment, Trajectory, extract_best_trajectory
from .primitives import MotionPrimitive, VehicleState

RESULT_FORMAT = "cirrt-result/1"
SAMPLE_COLUMNS = ("t", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az", "segment_id", "impact_flag")
# Grid instants this close to an impact are replaced by the impact row pair.
_SNAP = 1e-12


def fmt(x: Optional[float]) -> str:
    """Nine significant digits; empty for a missing value."""
    return "" if x is None else f"{x:.9g}"


def _flat(s: Optional[VehicleState]):
    return None if s is None else list(s.flat())


def result_to_dict(result: PlanResult, *, scenario: str, mode: str, seed, budget: str) -> dict:
    tree = result.tree
    nodes = [
        {
            "id": n.id,
            "kind": n.kind.value,
            "time": n.time,
            "parent": n.parent,
            "cost": n.cost,
            "state": list(n.state.flat()),
            "post_state": _flat(n.post_state),
            "normal": None if n.surface_normal is None else list(n.surface_normal),
        }
        for n in tree.nodes
    ]
    segments, impacts = [], []
    if result.solved:
        traj = extract_best_trajectory(tree)
        for k, seg in enumerate(traj.segments):
            p = seg.primitive
            segments.append({"t0": p.t0, "tf": p.tf, "coeffs": list(p.coeffs), "nodes": list(seg.node_ids)})
            if seg.impact is not None:
                imp = seg.impact
                impacts.append(
                    {
                        "segment": k,
                        "time": imp.time,
                        "pre_state": _flat(imp.pre_state),
                        "post_state": _flat(imp.post_state),
                        "normal": list(imp.normal),
                    }
                )
    return {
        "format": RESULT_FORMAT,
        "scenario": scenario,
        "mode": mode,
        "seed": seed,
        "budget": budget,
        "solved": result.solved,
        "best_time": result.best_time,
        "iterations": result.iterations,
        "tree_size": len(tree),
        "collision_nodes": tree.count(NodeKind.COLLISION),
        "counters": result.counters,
        "checkpoints": [
            {"at": c.at, "best_time": c.best_time, "tree_size": c.tree_size, "collision_nodes": c.collision_nodes}
            for c in result.checkpoints
        ],
        "segments": segments,
        "impacts": impacts,
        "nodes": nodes,
    }


def write_json(data: dict, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(data, indent=1, allow_nan=False) + "\n")


def trajectory_from_dict(data: dict) -> Trajectory:
    """Rebuild the best trajectory stored in a result file.

    Raises:
        ValueError: the file holds no trajectory or is not a result file.
    """
    if data.get("format") != RESULT_FORMAT:
        raise ValueError(f"not a {RESULT_FORMAT} file")
    if not data["segments"]:
        raise ValueError("result contains no trajectory")
    by_segment = {imp["segment"]: imp for imp in data["impacts"]}
    segments = []
    for k, seg in enumerate(data["segments"]):
        impact = None
        if k in by_segment:
            imp = by_segment[k]
            impact = Impact(
                imp["time"],
                VehicleState.from_flat(imp["pre_state"]),
                VehicleState.from_flat(imp["post_state"]),
                Vec3(*imp["normal"]),
            )
        segments.append(Segment(MotionPrimitive(seg["t0"], seg["tf"], seg["coeffs"]), tuple(seg["nodes"]), impact))
    return Trajectory(tuple(segments))


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    return trajectory_from_dict(json.loads(Path(path).read_text()))


def dense_rows(traj: Trajectory, rate_hz: float) -> list[tuple]:
    """Rows ``(t, x, y, z, vx, vy, vz, ax, ay, az, segment_id, impact_flag)``.

    The grid is ``t0 + i / rate_hz`` up to the trajectory end. Each impact
    adds two rows at its instant, the pre-impact state from the arriving
    segment then the post-impact state from the departing one.
    """
    if not rate_hz > 0 or not math.isfinite(rate_hz):
        raise ValueError(f"rate must be a positive number, got {rate_hz}")
    t0 = traj.segments[0].primitive.t0
    n = int(math.floor((traj.duration - t0) * rate_hz + 1e-9))
    grid = [min(t0 + i / rate_hz, traj.duration) for i in range(n + 1)]
    events = [(k, s.impact.time) for k, s in enumerate(traj.segments) if s.impact is not None]
    rows = []

    def row(t, k, flag):
        s = traj.segments[k].primitive.state(t)
        return (t, *s.position, *s.velocity, *s.acceleration, k, flag)

    e = 0
    for t in grid:
        while e < len(events) and events[e][1] <= t + _SNAP:
            k, ti = events[e]
            rows.append(row(ti, k - 1, 1))
            rows.append(row(ti, k, 1))
            e += 1
        if any(abs(t - ti) <= _SNAP for _, ti in events):
            continue
        rows.append(row(t, traj.segment_index(t), 0))
    return rows


def write_samples(rows, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_COLUMNS)
        for r in rows:
            w.writerow([repr(float(v)) for v in r[:10]] + [r[10], r[11]])
