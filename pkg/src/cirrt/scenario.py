"""Scenario files: JSON validated against the bundled schema, SI units throughout.

A ``2d`` embedding fixes ``z``: points and vectors may then be written with
two components, sampled velocity and acceleration have zero ``z``, and boxes
given with two-component corners are extruded far along ``z``. The writer
always emits three components, so ``parse(write(s)) == s``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import jsonschema

from .collision import DEFAULT_PARAMS, CollisionParams
from .geometry import AxisAlignedBox, Sphere, Vec3, contains, inflate
from .planner import Budget, Iterations, PlannerConfig, StateBounds
from .primitives import FeasibilityLimits, VehicleState

FORMAT = "cirrt-scenario/1"
# Half-height of boxes extruded from 2D footprints.
EXTRUDE = 1e3
DEFAULT_GOAL_RATE = 0.1
BUNDLED = ("tunnel", "hop", "spheres3d")


class ScenarioError(ValueError):
    """Invalid scenario; ``path`` names the offending field (dotted, with indices)."""

    def __init__(self, path: str, message: str):
        self.path = path or "<root>"
        super().__init__(f"{self.path}: {message}")


@dataclass(frozen=True)
class Embedding:
    kind: str = "3d"
    z_fixed: Optional[float] = None

    @property
    def planar(self) -> bool:
        return self.kind == "2d"


@dataclass(frozen=True)
class Scenario:
    name: str
    bounds: StateBounds
    obstacles: tuple
    start: VehicleState
    goal: VehicleState
    t_end_init: float
    limits: FeasibilityLimits = FeasibilityLimits()
    collision: CollisionParams = DEFAULT_PARAMS
    r_veh: float = 0.0
    embedding: Embedding = Embedding()
    goal_sampling_rate: float = DEFAULT_GOAL_RATE
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for label, s in (("start", self.start), ("goal", self.goal)):
            if not self.bounds.contains_position(s.position):
                raise ScenarioError(f"{label}.position", f"{tuple(s.position)} is outside the position bounds")
        for i, ob in enumerate(self.obstacles):
            if contains(inflate(ob, self.r_veh), self.start.position):
                raise ScenarioError(f"obstacles[{i}]", "start position is inside this (inflated) obstacle")
        if not self.t_end_init > 0:
            raise ScenarioError("t_end_init", "must be positive")

    def config(
        self,
        *,
        inclusive: bool = True,
        budget: Budget = Iterations(1000),
        seed=0,
        checkpoints=(),
        debug_checks: bool = False,
    ) -> PlannerConfig:
        return PlannerConfig(
            state_bounds=self.bounds,
            t_end_init=self.t_end_init,
            goal_sampling_rate=self.goal_sampling_rate,
            rng_seed=seed,
            budget=budget,
            collision_inclusive=inclusive,
            feasibility=self.limits,
            collision=self.collision,
            r_veh=self.r_veh,
            checkpoints=tuple(checkpoints),
            debug_checks=debug_checks,
        )


def default_t_end_init(start: VehicleState, goal: VehicleState, bounds: StateBounds) -> float:
    """Generous overestimate: 4 x straight-line distance / max speed bound + 4 s."""
    vmax = max(max(abs(a), abs(b)) for a, b in zip(bounds.velocity_min, bounds.velocity_max))
    dist = math.dist(start.position, goal.position)
    return 4.0 * dist / vmax + 4.0 if vmax > 0 else 4.0 + dist


# --------------------------------------------------------------------- parsing


def _schema():
    return json.loads(resources.files(__package__).joinpath("scenario.schema.json").read_text())


_VALIDATOR = None


def _validator():
    global _VALIDATOR
    if _VALIDATOR is None:
        _VALIDATOR = jsonschema.Draft202012Validator(_schema())
    return _VALIDATOR


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


class _Reader:
    def __init__(self, embedding: Embedding):
        self.emb = embedding

    def vec(self, value, path, *, point: bool, free_z: bool = False) -> Vec3:
        """Point (z pinned to z_fixed) or free vector (z pinned to 0) in a 2d embedding.

        With ``free_z`` (obstacle geometry) a third component is taken as given.
        """
        value = [float(v) for v in value]
        if not self.emb.planar or (free_z and len(value) == 3):
            if len(value) != 3:
                raise ScenarioError(path, "3d scenarios need three components")
            return Vec3(*value)
        z = self.emb.z_fixed if point else 0.0
        if len(value) == 2:
            return Vec3(value[0], value[1], z)
        if value[2] != z:
            raise ScenarioError(path, f"z must be {z} in a 2d scenario, got {value[2]}")
        return Vec3(*value)

    def state(self, d, path) -> VehicleState:
        zero = [0.0, 0.0, 0.0]
        return VehicleState(
            self.vec(d["position"], f"{path}.position", point=True),
            self.vec(d.get("velocity", zero), f"{path}.velocity", point=False),
            self.vec(d.get("acceleration", zero), f"{path}.acceleration", point=False),
        )

    def obstacle(self, d, path):
        try:
            if d["type"] == "sphere":
                return Sphere(self.vec(d["center"], f"{path}.center", point=True, free_z=True), float(d["radius"]))
            lo, hi = d["min"], d["max"]
            if self.emb.planar and len(lo) == 2 and len(hi) == 2:
                z = self.emb.z_fixed
                return AxisAlignedBox((*lo, z - EXTRUDE), (*hi, z + EXTRUDE))
            return AxisAlignedBox(
                self.vec(lo, f"{path}.min", point=True, free_z=True), self.vec(hi, f"{path}.max", point=True, free_z=True)
            )
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(path, str(exc)) from None

    def box(self, d, path, default_half, *, point):
        if d is None:
            if self.emb.planar:
                return Vec3(-default_half, -default_half, 0.0), Vec3(default_half, default_half, 0.0)
            return Vec3(*(-default_half,) * 3), Vec3(*(default_half,) * 3)
        return self.vec(d["min"], f"{path}.min", point=point), self.vec(d["max"], f"{path}.max", point=point)


def scenario_from_dict(data: dict) -> Scenario:
    """Build a scenario from already-decoded JSON.

    Raises:
        ScenarioError: schema or semantic violation, with the field path.
    """
    errors = sorted(_validator().iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(_path(err.absolute_path), err.message)
    emb = data.get("embedding", {"kind": "3d"})
    embedding = Embedding(emb["kind"], float(emb["z_fixed"]) if emb["kind"] == "2d" else None)
    r = _Reader(embedding)

    b = data["bounds"]
    try:
        bounds = StateBounds(
            *r.box(b["position"], "bounds.position", 0, point=True),
            *r.box(b.get("velocity"), "bounds.velocity", 3.0, point=False),
            *r.box(b.get("acceleration"), "bounds.acceleration", 2.0, point=False),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError("bounds", str(exc)) from None

    obstacles = [r.obstacle(o, f"obstacles[{i}]") for i, o in enumerate(data["obstacles"])]
    start = r.state(data["start"], "start")
    goal = r.state(data["goal"], "goal")

    lim = data.get("limits", {})
    defaults = FeasibilityLimits()
    f_min = float(lim.get("f_min", defaults.f_min))
    f_max = float(lim.get("f_max", defaults.f_max))
    if not f_min < f_max:
        raise ScenarioError("limits.f_min", f"f_min ({f_min}) must be below f_max ({f_max})")
    limits = FeasibilityLimits(
        f_min, f_max, float(lim.get("omega_max", defaults.omega_max)), Vec3.of(lim.get("gravity", defaults.gravity))
    )
    col = data.get("collision", {})
    collision = CollisionParams(
        float(col.get("restitution_e", DEFAULT_PARAMS.restitution_e)),
        float(col.get("kappa", DEFAULT_PARAMS.kappa)),
        float(col.get("time_threshold", DEFAULT_PARAMS.time_threshold)),
    )
    t_end_init = data.get("t_end_init")
    t_end_init = float(t_end_init) if t_end_init is not None else default_t_end_init(start, goal, bounds)
    return Scenario(
        name=data["name"],
        bounds=bounds,
        obstacles=obstacles,
        start=start,
        goal=goal,
        t_end_init=t_end_init,
        limits=limits,
        collision=collision,
        r_veh=float(data.get("r_veh", 0.0)),
        embedding=embedding,
        goal_sampling_rate=float(data.get("sampling", {}).get("goal_rate", DEFAULT_GOAL_RATE)),
        description=data.get("description", ""),
    )


def parse_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        OSError: the file cannot be read.
        ScenarioError: malformed JSON or an invalid field.
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("<root>", f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(data)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"no bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files(__package__).joinpath("scenarios", f"{name}.json")))


def resolve(name_or_path: Union[str, Path]) -> Path:
    """A scenario path, or the name of a bundled scenario."""
    p = Path(name_or_path)
    if not p.exists() and str(name_or_path) in BUNDLED:
        return bundled_path(str(name_or_path))
    return p


def load(name_or_path: Union[str, Path]) -> Scenario:
    return parse_scenario(resolve(name_or_path))


# --------------------------------------------------------------------- writing


def _obstacle_dict(ob) -> dict:
    if isinstance(ob, Sphere):
        return {"type": "sphere", "center": list(ob.center), "radius": ob.radius}
    return {"type": "box", "min": list(ob.min_corner), "max": list(ob.max_corner)}


def _state_dict(s: VehicleState) -> dict:
    return {"position": list(s.position), "velocity": list(s.velocity), "acceleration": list(s.acceleration)}


def scenario_to_dict(s: Scenario) -> dict:
    b = s.bounds
    emb = {"kind": "2d", "z_fixed": s.embedding.z_fixed} if s.embedding.planar else {"kind": "3d"}
    return {
        "format": FORMAT,
        "name": s.name,
        "description": s.description,
        "embedding": emb,
        "bounds": {
            "position": {"min": list(b.position_min), "max": list(b.position_max)},
            "velocity": {"min": list(b.velocity_min), "max": list(b.velocity_max)},
            "acceleration": {"min": list(b.acceleration_min), "max": list(b.acceleration_max)},
        },
        "obstacles": [_obstacle_dict(o) for o in s.obstacles],
        "start": _state_dict(s.start),
        "goal": _state_dict(s.goal),
        "t_end_init": s.t_end_init,
        "limits": {
            "f_min": s.limits.f_min,
            "f_max": s.limits.f_max,
            "omega_max": s.limits.omega_max,
            "gravity": list(s.limits.gravity),
        },
        "collision": {
            "restitution_e": s.collision.restitution_e,
            "kappa": s.collision.kappa,
            "time_threshold": s.collision.time_threshold,
        },
        "r_veh": s.r_veh,
        "sampling": {"goal_rate": s.goal_sampling_rate},
    }


def write_scenario(s: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")
