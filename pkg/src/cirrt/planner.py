"""Collision-inclusive kinodynamic RRT* over state-time nodes.

Nodes pair a full vehicle state with an arrival time. In collision-inclusive
mode a sample whose cheapest connecting primitive hits an obstacle is
replaced by a collision node at the impact instant, and edges leave that node
from the post-impact state predicted by the impact model. The
collision-exclusive baseline discards such samples instead.
"""

from __future__ import annotations

import enum
import math
import time as _time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .collision import DEFAULT_PARAMS, CollisionParams, collision_model
from .geometry import ZERO, ObstacleSet, Vec3, contains, dot, inflate
from .primitives import MIN_DURATION, FeasibilityLimits, MotionPrimitive, VehicleState, generate_primitive

# The k-th cost screen only pays off once the tree is this large.
K_SCREEN_MIN_NODES = 16


class PlannerError(RuntimeError):
    pass


class NoTrajectoryError(PlannerError):
    """Raised when no goal node has been connected."""


class TreeInvariantError(AssertionError):
    pass


class NodeKind(enum.Enum):
    NORMAL = "normal"
    GOAL = "goal"
    COLLISION = "collision"


# ---------------------------------------------------------------------- config


@dataclass(frozen=True)
class Iterations:
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"iteration budget must be >= 0, got {self.count}")

    @property
    def amount(self) -> float:
        return self.count

    def __str__(self):
        return f"iters:{self.count}"


@dataclass(frozen=True)
class WallClock:
    seconds: float

    def __post_init__(self):
        if not self.seconds >= 0:
            raise ValueError(f"wall-clock budget must be >= 0, got {self.seconds}")

    @property
    def amount(self) -> float:
        return self.seconds

    def __str__(self):
        return f"wall:{self.seconds:g}"


Budget = Union[Iterations, WallClock]


def parse_budget(text: str) -> Budget:
    """Parse ``iters:N`` or ``wall:SECONDS``."""
    kind, sep, value = text.partition(":")
    try:
        if sep and kind == "iters":
            return Iterations(int(value))
        if sep and kind == "wall":
            return WallClock(float(value))
    except ValueError as exc:
        raise ValueError(f"bad budget {text!r}: {exc}") from None
    raise ValueError(f"bad budget {text!r}; expected iters:N or wall:SECONDS")


def _box(lo, hi, name):
    lo, hi = Vec3.of(lo), Vec3.of(hi)
    if any(a > b for a, b in zip(lo, hi)):
        raise ValueError(f"{name} bounds need min <= max, got {lo}, {hi}")
    return lo, hi


@dataclass(frozen=True)
class StateBounds:
    """Sampling boxes. Equal min and max pin a component (used for 2D)."""

    position_min: Vec3
    position_max: Vec3
    velocity_min: Vec3 = Vec3(-3.0, -3.0, -3.0)
    velocity_max: Vec3 = Vec3(3.0, 3.0, 3.0)
    acceleration_min: Vec3 = Vec3(-2.0, -2.0, -2.0)
    acceleration_max: Vec3 = Vec3(2.0, 2.0, 2.0)

    def __post_init__(self):
        for name in ("position", "velocity", "acceleration"):
            lo, hi = _box(getattr(self, f"{name}_min"), getattr(self, f"{name}_max"), name)
            object.__setattr__(self, f"{name}_min", lo)
            object.__setattr__(self, f"{name}_max", hi)

    def lows(self) -> np.ndarray:
        return np.array([*self.position_min, *self.velocity_min, *self.acceleration_min])

    def highs(self) -> np.ndarray:
        return np.array([*self.position_max, *self.velocity_max, *self.acceleration_max])

    def contains_position(self, p) -> bool:
        return all(lo <= x <= hi for lo, x, hi in zip(self.position_min, p, self.position_max))


@dataclass(frozen=True)
class PlannerConfig:
    state_bounds: StateBounds
    t_end_init: float
    goal_sampling_rate: float = 0.1
    rng_seed: Union[int, Sequence[int]] = 0
    budget: Budget = Iterations(1000)
    collision_inclusive: bool = True
    feasibility: FeasibilityLimits = FeasibilityLimits()
    collision: CollisionParams = DEFAULT_PARAMS
    r_veh: float = 0.0
    checkpoints: tuple = ()
    debug_checks: bool = False

    def __post_init__(self):
        if not 0 <= self.goal_sampling_rate <= 1:
            raise ValueError(f"goal_sampling_rate must be in [0, 1], got {self.goal_sampling_rate}")
        if not self.t_end_init > 0:
            raise ValueError(f"t_end_init must be positive, got {self.t_end_init}")
        if self.r_veh < 0:
            raise ValueError(f"r_veh must be >= 0, got {self.r_veh}")
        marks = tuple(sorted(float(c) for c in self.checkpoints))
        if any(c < 0 or c > self.budget.amount for c in marks):
            raise ValueError(f"checkpoints must lie in [0, {self.budget.amount}], got {marks}")
        object.__setattr__(self, "checkpoints", marks)


# ----------------------------------------------------------------------- nodes


@dataclass(frozen=True)
class Candidate:
    """A node that is not (yet) in the tree."""

    state: VehicleState
    time: float
    kind: NodeKind = NodeKind.NORMAL
    post_state: Optional[VehicleState] = None
    surface_normal: Optional[Vec3] = None

    @property
    def departure(self) -> VehicleState:
        return self.post_state if self.kind is NodeKind.COLLISION else self.state


@dataclass(eq=False)
class PlanNode:
    id: int
    state: VehicleState
    time: float
    kind: NodeKind
    parent: Optional[int]
    cost: float
    edge_cost: float = 0.0
    children: list = field(default_factory=list)
    post_state: Optional[VehicleState] = None
    surface_normal: Optional[Vec3] = None

    @property
    def departure(self) -> VehicleState:
        """State that outgoing primitives start from."""
        return self.post_state if self.kind is NodeKind.COLLISION else self.state


def connect(n1, n2) -> MotionPrimitive:
    """Primitive from ``n1`` (its post-impact state for collision nodes) to ``n2``."""
    if not n1.time < n2.time:
        raise ValueError(f"connect needs n1.time < n2.time, got {n1.time} and {n2.time}")
    return generate_primitive(n1.departure, n1.time, n2.state, n2.time)


class ExploringTree:
    """Append-only node store with array mirrors for vectorized cost scans."""

    def __init__(self, root: VehicleState, t_end_init: float, capacity: int = 256):
        self.nodes: list[PlanNode] = []
        self.t_end_init = float(t_end_init)
        self.t_end_best = float(t_end_init)
        self.best_goal: Optional[int] = None
        # k-th smallest feasible primitive cost of the most recent screened scan
        self.k_cost_tracker: Optional[float] = None
        self._arrive = np.empty((capacity, 9))
        self._depart = np.empty((capacity, 9))
        self._time = np.empty(capacity)
        self._cost = np.empty(capacity)
        self._flat: list[tuple] = []
        self._add(Candidate(root, 0.0), None, 0.0, 0.0)

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, i) -> PlanNode:
        return self.nodes[i]

    @property
    def times(self) -> np.ndarray:
        return self._time[: len(self.nodes)]

    @property
    def costs(self) -> np.ndarray:
        return self._cost[: len(self.nodes)]

    @property
    def departures(self) -> np.ndarray:
        return self._depart[: len(self.nodes)]

    @property
    def arrivals(self) -> np.ndarray:
        return self._arrive[: len(self.nodes)]

    def departure_flat(self, i: int) -> tuple:
        return self._flat[i]

    def count(self, kind: NodeKind) -> int:
        return sum(1 for n in self.nodes if n.kind is kind)

    def _grow(self):
        cap = 2 * self._time.shape[0]
        for name in ("_arrive", "_depart"):
            arr = np.empty((cap, 9))
            arr[: len(self.nodes)] = getattr(self, name)[: len(self.nodes)]
            setattr(self, name, arr)
        for name in ("_time", "_cost"):
            arr = np.empty(cap)
            arr[: len(self.nodes)] = getattr(self, name)[: len(self.nodes)]
            setattr(self, name, arr)

    def _add(self, cand: Candidate, parent: Optional[int], cost: float, edge_cost: float) -> PlanNode:
        i = len(self.nodes)
        if i == self._time.shape[0]:
            self._grow()
        node = PlanNode(
            i, cand.state, cand.time, cand.kind, parent, cost, edge_cost,
            post_state=cand.post_state, surface_normal=cand.surface_normal,
        )
        self.nodes.append(node)
        self._arrive[i] = node.state.flat()
        self._depart[i] = node.departure.flat()
        self._time[i] = node.time
        self._cost[i] = cost
        self._flat.append(node.departure.flat())
        if parent is not None:
            self.nodes[parent].children.append(i)
        return node

    def insert(self, cand: Candidate, parent: int, edge_cost: float) -> PlanNode:
        node = self._add(cand, parent, self.nodes[parent].cost + edge_cost, edge_cost)
        if node.kind is NodeKind.GOAL and node.time < self.t_end_best:
            self.t_end_best = node.time
            self.best_goal = node.id
        return node

    def reparent(self, i: int, new_parent: int, edge_cost: float):
        """Move node ``i`` under ``new_parent`` and shift its subtree's costs."""
        node = self.nodes[i]
        self.nodes[node.parent].children.remove(i)
        self.nodes[new_parent].children.append(i)
        node.parent = new_parent
        node.edge_cost = edge_cost
        delta = self.nodes[new_parent].cost + edge_cost - node.cost
        stack = [i]
        while stack:
            j = stack.pop()
            n = self.nodes[j]
            if j == i:
                n.cost = self.nodes[new_parent].cost + edge_cost
            else:
                n.cost = self.nodes[n.parent].cost + n.edge_cost
            self._cost[j] = n.cost
            stack.extend(n.children)
        return delta

    def path_to(self, i: int) -> list[int]:
        path = []
        while i is not None:
            path.append(i)
            i = self.nodes[i].parent
        return path[::-1]


def k_neighbors(tree_size: int) -> Optional[int]:
    """``ceil(2 e ln |T|)``, or None while the screen is inactive."""
    if tree_size < K_SCREEN_MIN_NODES:
        return None
    return math.ceil(2 * math.e * math.log(tree_size))


# ---------------------------------------------------------------- the planner


@dataclass(frozen=True)
class Checkpoint:
    at: float
    iterations: int
    elapsed: float
    best_time: Optional[float]
    tree_size: int
    collision_nodes: int


@dataclass
class PlanResult:
    tree: ExploringTree
    config: PlannerConfig
    iterations: int
    elapsed: float
    counters: dict
    checkpoints: list

    @property
    def best_goal(self) -> Optional[int]:
        return self.tree.best_goal

    @property
    def t_end_best(self) -> float:
        return self.tree.t_end_best

    @property
    def solved(self) -> bool:
        return self.tree.best_goal is not None

    @property
    def best_time(self) -> Optional[float]:
        return self.tree.t_end_best if self.solved else None

    def trajectory(self) -> "Trajectory":
        return extract_best_trajectory(self.tree)


def _world(obstacles, r_veh: float) -> ObstacleSet:
    obs = ObstacleSet.coerce(obstacles)
    if r_veh > 0:
        obs = ObstacleSet.coerce([inflate(o, r_veh) for o in obs.obstacles])
    return obs


class Planner:
    """One planning run: a tree, its random stream and the obstacle world.

    Args:
        start: Root state at time 0.
        goal: Goal state.
        obstacles: Convex obstacles; they are inflated by ``config.r_veh``.
        config: Planner settings.
    """

    def __init__(self, start: VehicleState, goal: VehicleState, obstacles, config: PlannerConfig):
        self.config = config
        self.goal = goal
        self.world = _world(obstacles, config.r_veh)
        for i, ob in enumerate(self.world.obstacles):
            if contains(ob, start.position):
                raise PlannerError(f"start position {start.position} is inside obstacle {i}")
        self.tree = ExploringTree(start, config.t_end_init)
        self.rng = np.random.default_rng(config.rng_seed)
        self._lows = config.state_bounds.lows()
        self._span = config.state_bounds.highs() - self._lows
        self._limits = config.feasibility.args()
        self._thr = config.collision.time_threshold
        self.counters = dict.fromkeys(
            (
                "goal_samples",
                "discarded_no_parent",
                "discarded_colliding",
                "discarded_impact",
                "collision_nodes",
                "inserted",
                "not_connected",
                "rewired",
                "edge_checks",
            ),
            0,
        )

    # -- sampling ---------------------------------------------------------

    def sample(self) -> Candidate:
        """Goal state with probability ``goal_sampling_rate``, else uniform in the bounds.

        Eleven uniforms are drawn every call whatever the outcome, so that
        runs sharing a seed share their random stream.
        """
        u = self.rng.random(11)
        t = self.tree.t_end_best * (1.0 - u[10])
        if u[0] < self.config.goal_sampling_rate:
            self.counters["goal_samples"] += 1
            return Candidate(self.goal, t, NodeKind.GOAL)
        x = self._lows + u[1:10] * self._span
        return Candidate(VehicleState.from_flat(tuple(x.tolist())), t)

    # -- edge checks ------------------------------------------------------

    def edge_status(self, src: int, dst_state: VehicleState, dst_time: float, dst_kind: NodeKind) -> int:
        """Feasibility and collision status of the edge ``src -> (dst_state, dst_time)``.

        Edges leaving a collision node skip their first ``time_threshold``
        seconds and edges ending at one skip their last, since those
        endpoints lie on an obstacle surface.
        """
        node = self.tree[src]
        T = dst_time - node.time
        if T < MIN_DURATION:
            return kernels.INFEASIBLE
        self.counters["edge_checks"] += 1
        skip_start = self._thr if node.kind is NodeKind.COLLISION else 0.0
        skip_end = self._thr if dst_kind is NodeKind.COLLISION else 0.0
        return kernels.check_edge(
            self.tree.departure_flat(src), dst_state.flat(), T, *self._limits,
            self.world.packed, self._thr, skip_start, skip_end,
        )

    def _costs_into(self, cand: Candidate):
        ids = np.flatnonzero(self.tree.times < cand.time)
        if ids.size == 0:
            return ids, ids.astype(float)
        T = cand.time - self.tree.times[ids]
        return ids, kernels.costs_to_target(self.tree.departures[ids], np.array(cand.state.flat()), T)

    def closest_node(self, cand: Candidate) -> Optional[int]:
        """Earlier node with the cheapest connecting primitive; ties go to the lowest id."""
        ids, costs = self._costs_into(cand)
        if ids.size == 0:
            return None
        return int(ids[int(np.argmin(costs))])

    # -- algorithm steps --------------------------------------------------

    def get_collision_node(self, cand: Candidate) -> Optional[Candidate]:
        """Replace ``cand`` by a collision node if its closest-node primitive hits.

        Returns None when the sample has to be discarded: no earlier node,
        or an impact that cannot seed a valid collision node (impact at the
        parent's own time, or velocity not pointing into the surface).
        """
        nc = self.closest_node(cand)
        if nc is None:
            self.counters["discarded_no_parent"] += 1
            return None
        parent = self.tree[nc]
        p = connect(parent, cand)
        skip_start = self._thr if parent.kind is NodeKind.COLLISION else 0.0
        hit, tau, _, nx, ny, nz = kernels.first_hit(p.coeffs, skip_start, p.duration, self.world.packed, self._thr, True)
        if not hit:
            return cand
        t_n = p.t0 + tau
        normal = Vec3(nx, ny, nz)
        s_n = p.state(t_n)
        if t_n - parent.time < MIN_DURATION or not dot(s_n.velocity, normal) < 0:
            self.counters["discarded_impact"] += 1
            return None
        self.counters["collision_nodes"] += 1
        post = collision_model(s_n, normal, self.config.collision)
        return Candidate(s_n, t_n, NodeKind.COLLISION, post, normal)

    def connect_min_cost_path(self, cand: Candidate) -> Optional[PlanNode]:
        """Insert ``cand`` under the feasible parent of least total cost.

        Parents are scanned in order of primitive cost. Once the tree has
        ``K_SCREEN_MIN_NODES`` nodes the scan stops after ``k`` feasible
        parents, which skips every costlier primitive unchecked.
        """
        ids, costs = self._costs_into(cand)
        if ids.size == 0:
            self.counters["discarded_no_parent"] += 1
            return None
        k = k_neighbors(len(self.tree))
        best, best_total, best_edge = -1, math.inf, 0.0
        passed = 0
        tree_costs = self.tree.costs
        for j in np.argsort(costs, kind="stable"):
            if k is not None and passed >= k:
                break
            i = int(ids[j])
            if self.edge_status(i, cand.state, cand.time, cand.kind) != kernels.OK:
                continue
            passed += 1
            self.tree.k_cost_tracker = float(costs[j])
            total = tree_costs[i] + costs[j]
            if total < best_total:
                best, best_total, best_edge = i, total, float(costs[j])
        if best < 0:
            self.counters["not_connected"] += 1
            return None
        self.counters["inserted"] += 1
        return self.tree.insert(cand, best, best_edge)

    def rewire(self, node: PlanNode):
        """Reparent later nodes through ``node`` where that lowers their cost."""
        tree = self.tree
        ids = np.flatnonzero(tree.times > node.time)
        if ids.size == 0:
            return
        T = tree.times[ids] - node.time
        costs = kernels.costs_from_source(np.array(node.departure.flat()), tree.arrivals[ids], T)
        k = k_neighbors(len(tree))
        passed = 0
        for j in np.argsort(costs, kind="stable"):
            if k is not None and passed >= k:
                break
            i = int(ids[j])
            target = tree[i]
            if self.edge_status(node.id, target.state, target.time, target.kind) != kernels.OK:
                continue
            passed += 1
            if node.cost + costs[j] < target.cost:
                tree.reparent(i, node.id, float(costs[j]))
                self.counters["rewired"] += 1

    def step(self) -> Optional[PlanNode]:
        """One iteration; returns the inserted node if any."""
        cand = self.sample()
        if cand.kind is not NodeKind.GOAL:
            if self.config.collision_inclusive:
                cand = self.get_collision_node(cand)
            else:
                cand = self._exclusive_filter(cand)
            if cand is None:
                return None
        node = self.connect_min_cost_path(cand)
        if node is not None:
            self.rewire(node)
        return node

    def _exclusive_filter(self, cand: Candidate) -> Optional[Candidate]:
        nc = self.closest_node(cand)
        if nc is None:
            self.counters["discarded_no_parent"] += 1
            return None
        parent = self.tree[nc]
        p = connect(parent, cand)
        skip_start = self._thr if parent.kind is NodeKind.COLLISION else 0.0
        if kernels.first_hit(p.coeffs, skip_start, p.duration, self.world.packed, self._thr, False)[0]:
            self.counters["discarded_colliding"] += 1
            return None
        return cand

    # -- driver -----------------------------------------------------------

    def check(self, recheck_edges: bool = True):
        check_tree(self.tree, self.world, self.config, recheck_edges=recheck_edges)

    def run(self) -> PlanResult:
        budget = self.config.budget
        marks = list(self.config.checkpoints) or [budget.amount]
        log: list[Checkpoint] = []
        iterations = 0
        start = _time.perf_counter()

        def progress(elapsed):
            return iterations if isinstance(budget, Iterations) else elapsed

        def record(elapsed):
            while marks and marks[0] <= progress(elapsed):
                log.append(
                    Checkpoint(
                        marks.pop(0), iterations, elapsed, self.tree.t_end_best if self.tree.best_goal is not None else None,
                        len(self.tree), self.tree.count(NodeKind.COLLISION),
                    )
                )

        record(0.0)
        while True:
            elapsed = _time.perf_counter() - start
            if progress(elapsed) >= budget.amount:
                break
            self.step()
            iterations += 1
            if self.config.debug_checks:
                self.check()
            record(_time.perf_counter() - start)
        elapsed = _time.perf_counter() - start
        record(elapsed)
        return PlanResult(self.tree, self.config, iterations, elapsed, dict(self.counters), log)


def plan(scenario, config: PlannerConfig) -> PlanResult:
    """Run the planner on anything with ``start``, ``goal`` and ``obstacles``."""
    return Planner(scenario.start, scenario.goal, scenario.obstacles, config).run()


# ------------------------------------------------------------------ validation


def check_tree(tree: ExploringTree, world=(), config: Optional[PlannerConfig] = None, *, recheck_edges=True):
    """Full structural scan of the tree.

    Raises:
        TreeInvariantError: naming the first violated invariant.
    """

    def fail(msg):
        raise TreeInvariantError(msg)

    nodes = tree.nodes
    root = nodes[0]
    if root.parent is not None or root.time != 0 or root.cost != 0:
        fail("root must have no parent, time 0 and cost 0")
    seen = set()
    stack = [0]
    while stack:
        i = stack.pop()
        if i in seen:
            fail(f"node {i} reached twice: parent links are not a tree")
        seen.add(i)
        for c in nodes[i].children:
            if nodes[c].parent != i:
                fail(f"node {c} listed as child of {i} but its parent is {nodes[c].parent}")
            stack.append(c)
    if len(seen) != len(nodes):
        fail(f"{len(nodes) - len(seen)} nodes unreachable from the root")

    world = ObstacleSet.coerce(world)
    limits = (config.feasibility if config else FeasibilityLimits()).args()
    params = config.collision if config else DEFAULT_PARAMS
    thr = params.time_threshold
    goal_times = []
    for n in nodes[1:]:
        parent = nodes[n.parent]
        if not parent.time < n.time:
            fail(f"node {n.id} time {n.time} not after parent {parent.id} time {parent.time}")
        edge = kernels.jerk_cost(connect(parent, n).coeffs, n.time - parent.time)
        if not math.isclose(n.cost, parent.cost + edge, rel_tol=1e-9, abs_tol=1e-12):
            fail(f"node {n.id} cost {n.cost} != parent cost {parent.cost} + edge {edge}")
        if tree.costs[n.id] != n.cost:
            fail(f"node {n.id} cost array out of sync")
        if n.kind is NodeKind.GOAL:
            goal_times.append(n.time)
        if n.kind is NodeKind.COLLISION:
            post, normal = n.post_state, n.surface_normal
            if post.position != n.state.position or post.acceleration != ZERO:
                fail(f"collision node {n.id} post state must keep position and zero acceleration")
            if not dot(post.velocity, normal) > 0 or not dot(n.state.velocity, normal) < 0:
                fail(f"collision node {n.id} velocities do not match an impact")
        if recheck_edges:
            skip_start = thr if parent.kind is NodeKind.COLLISION else 0.0
            skip_end = thr if n.kind is NodeKind.COLLISION else 0.0
            status = kernels.check_edge(
                parent.departure.flat(), n.state.flat(), n.time - parent.time, *limits,
                world.packed, thr, skip_start, skip_end,
            )
            if status != kernels.OK:
                fail(f"edge {parent.id}->{n.id} fails re-check with status {status}")
    expected = min(goal_times, default=tree.t_end_init)
    if tree.t_end_best != min(expected, tree.t_end_init):
        fail(f"t_end_best {tree.t_end_best} != earliest goal time {expected}")


# ------------------------------------------------------------------ trajectory


@dataclass(frozen=True)
class Impact:
    time: float
    pre_state: VehicleState
    post_state: VehicleState
    normal: Vec3


@dataclass(frozen=True)
class Segment:
    primitive: MotionPrimitive
    node_ids: tuple
    impact: Optional[Impact] = None  # impact the segment departs from


@dataclass(frozen=True)
class Trajectory:
    segments: tuple

    @property
    def duration(self) -> float:
        return self.segments[-1].primitive.tf

    @property
    def impacts(self) -> list:
        return [s.impact for s in self.segments if s.impact is not None]

    def segment_index(self, t: float) -> int:
        """Segment containing ``t``; boundaries belong to the later segment."""
        for i, s in enumerate(self.segments):
            if t < s.primitive.tf:
                return i
        return len(self.segments) - 1

    def state(self, t: float) -> VehicleState:
        return self.segments[self.segment_index(t)].primitive.state(t)


def extract_best_trajectory(tree: ExploringTree) -> Trajectory:
    """Backtrack from the earliest goal node to the root.

    Raises:
        NoTrajectoryError: no goal node has been connected.
    """
    if tree.best_goal is None:
        raise NoTrajectoryError("no feasible trajectory found")
    path = tree.path_to(tree.best_goal)
    segments = []
    for a, b in zip(path, path[1:]):
        na, nb = tree[a], tree[b]
        impact = None
        if na.kind is NodeKind.COLLISION:
            impact = Impact(na.time, na.state, na.post_state, na.surface_normal)
        segments.append(Segment(connect(na, nb), (a, b), impact))
    return Trajectory(tuple(segments))
