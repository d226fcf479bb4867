import math
from types import SimpleNamespace

import numpy as np
import pytest
from _oracles import signed_distance

from cirrt import kernels
from cirrt.collision import collision_model
from cirrt.geometry import AxisAlignedBox, Sphere, Vec3
from cirrt.planner import (
    Candidate,
    ExploringTree,
    Iterations,
    NodeKind,
    NoTrajectoryError,
    Planner,
    PlannerConfig,
    PlannerError,
    StateBounds,
    WallClock,
    check_tree,
    connect,
    extract_best_trajectory,
    k_neighbors,
    parse_budget,
    plan,
)
from cirrt.primitives import VehicleState, cost, evaluate, generate_primitive

WIDE = StateBounds((-5, -5, -5), (5, 5, 5))


def rest(*p):
    return VehicleState.of(p)


def make_planner(obstacles=(), start=rest(0, 0, 0), goal=rest(4, 0, 0), **kw):
    kw.setdefault("state_bounds", WIDE)
    kw.setdefault("t_end_init", 10.0)
    return Planner(start, goal, obstacles, PlannerConfig(**kw))


def rest_cost(a, b, T):
    return 720 * float(np.sum((np.asarray(b) - np.asarray(a)) ** 2)) / T**5


def add(planner, position, t, parent):
    tree = planner.tree
    cand = Candidate(rest(*position), t)
    return tree.insert(cand, parent, cost(connect(tree[parent], cand)))


HOP = SimpleNamespace(start=rest(0, 0, 1), goal=rest(2, 0, 1), obstacles=[])
HOP_BOUNDS = StateBounds((-1, -1, 1), (3, 1, 1), (-3, -3, 0), (3, 3, 0), (-2, -2, 0), (2, 2, 0))
Z = 1.0
TUNNEL = SimpleNamespace(
    start=rest(1, 2, Z),
    goal=rest(4, 5, Z),
    obstacles=[
        AxisAlignedBox((0, 1.0, Z - 1e3), (4.5, 1.5, Z + 1e3)),
        AxisAlignedBox((0, 2.5, Z - 1e3), (4.5, 3.0, Z + 1e3)),
    ],
)
TUNNEL_BOUNDS = StateBounds((0, 0, Z), (6, 6, Z), (-3, -3, 0), (3, 3, 0), (-2, -2, 0), (2, 2, 0))


# ---------------------------------------------------------------------- config


def test_parse_budget():
    assert parse_budget("iters:50") == Iterations(50)
    assert parse_budget("wall:0.25") == WallClock(0.25)
    for bad in ("iters", "iters:x", "wall:-1", "steps:3", "iters:-2"):
        with pytest.raises(ValueError):
            parse_budget(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(WIDE, 5.0, goal_sampling_rate=1.5)
    with pytest.raises(ValueError):
        PlannerConfig(WIDE, 0.0)
    with pytest.raises(ValueError):
        PlannerConfig(WIDE, 5.0, budget=Iterations(10), checkpoints=(20,))
    with pytest.raises(ValueError):
        StateBounds((0, 0, 0), (1, -1, 1))


def test_k_neighbors():
    assert k_neighbors(15) is None
    assert k_neighbors(16) == math.ceil(2 * math.e * math.log(16))
    assert k_neighbors(1000) == 38


# --------------------------------------------------------------------- sample


def test_goal_rate_one_always_samples_goal():
    planner = make_planner(goal_sampling_rate=1.0)
    for _ in range(100):
        c = planner.sample()
        assert c.kind is NodeKind.GOAL and c.state == planner.goal


def test_uniform_samples_are_centered_and_timed():
    planner = make_planner(goal_sampling_rate=0.0, state_bounds=StateBounds((0, 0, 0), (6, 4, 2)))
    draws = [planner.sample() for _ in range(10_000)]
    pos = np.array([c.state.position for c in draws])
    sigma = np.array([6, 4, 2]) / math.sqrt(12) / math.sqrt(len(draws))
    assert np.all(np.abs(pos.mean(axis=0) - [3, 2, 1]) < 3 * sigma)
    times = np.array([c.time for c in draws])
    assert np.all((times > 0) & (times <= planner.tree.t_end_best))
    vel = np.array([c.state.velocity for c in draws])
    assert vel.min() >= -3 and vel.max() <= 3


def test_pinned_components_stay_fixed():
    planner = make_planner(goal_sampling_rate=0.0, state_bounds=TUNNEL_BOUNDS)
    for _ in range(200):
        s = planner.sample().state
        assert s.position[2] == Z and s.velocity[2] == 0 and s.acceleration[2] == 0


# -------------------------------------------------------------------- connect


def test_connect_uses_departure_state():
    normal = Candidate(rest(0, 0, 0), 1.0)
    assert connect(normal, Candidate(rest(1, 0, 0), 2.0)).initial_state == normal.state

    pre = VehicleState.of((0, 0, 0), (-2, 1, 0))
    post = collision_model(pre, Vec3(1, 0, 0))
    hit = Candidate(pre, 1.0, NodeKind.COLLISION, post, Vec3(1, 0, 0))
    p = connect(hit, Candidate(rest(1, 0, 0), 2.0))
    assert p.initial_state.velocity == pytest.approx((0.86, 0.73479, 0), abs=1e-5)

    with pytest.raises(ValueError):
        connect(normal, Candidate(rest(1, 0, 0), 1.0))


# --------------------------------------------------------- get_collision_node


def test_collision_node_unchanged_without_obstacles(rng):
    planner = make_planner(goal_sampling_rate=0.0)
    for _ in range(50):
        c = planner.sample()
        assert planner.get_collision_node(c) is c


def test_collision_node_on_wall():
    wall = AxisAlignedBox((0.9, 0, 0), (1.1, 4, 2))
    planner = make_planner([wall], start=rest(0, 2, 1), goal=rest(0, 3, 1))
    out = planner.get_collision_node(Candidate(rest(2, 2, 1), 4.0))
    assert out.kind is NodeKind.COLLISION
    assert 0 <= signed_distance(wall, out.state.position)[0] <= 1e-3
    assert out.state.position[0] == pytest.approx(0.9, abs=1e-3)
    assert dot3(out.state.velocity, out.surface_normal) < 0
    assert dot3(out.post_state.velocity, out.surface_normal) > 0
    assert out.surface_normal == pytest.approx((-1, 0, 0))
    assert out.post_state == collision_model(out.state, out.surface_normal)
    assert 0 < out.time < 4.0


def dot3(a, b):
    return sum(x * y for x, y in zip(a, b))


def test_closest_node_is_cheapest_primitive():
    planner = make_planner()
    add(planner, (3, 0, 0), 1.0, 0)
    # node 1 is nearer in space but the root's longer primitive is cheaper
    assert planner.closest_node(Candidate(rest(3.3, 0, 0), 1.5)) == 0
    assert planner.closest_node(Candidate(rest(3.3, 0, 0), 5.0)) == 1
    assert planner.closest_node(Candidate(rest(1, 0, 0), 0.0)) is None


# ----------------------------------------------------- connect_min_cost_path


def test_single_root_connection():
    planner = make_planner()
    node = planner.connect_min_cost_path(Candidate(rest(1, 0, 0), 2.0))
    assert node.parent == 0
    assert node.cost == pytest.approx(rest_cost((0, 0, 0), (1, 0, 0), 2.0), rel=1e-12)


def test_unreachable_candidate_not_inserted():
    planner = make_planner()
    assert planner.connect_min_cost_path(Candidate(rest(100, 0, 0), 0.1)) is None
    assert len(planner.tree) == 1


def test_farther_parent_with_lower_total_cost_wins():
    planner = make_planner()
    add(planner, (1, 0, 0), 1.0, 0)  # cost 720
    node = planner.connect_min_cost_path(Candidate(rest(1.1, 0, 0), 2.0))
    assert node.parent == 0
    assert node.cost == pytest.approx(rest_cost((0, 0, 0), (1.1, 0, 0), 2.0), rel=1e-12)
    assert node.cost < 720 + rest_cost((1, 0, 0), (1.1, 0, 0), 1.0)


def test_goal_insertion_updates_best():
    planner = make_planner()
    node = planner.connect_min_cost_path(Candidate(planner.goal, 6.0, NodeKind.GOAL))
    assert planner.tree.best_goal == node.id and planner.tree.t_end_best == 6.0
    later = planner.connect_min_cost_path(Candidate(planner.goal, 8.0, NodeKind.GOAL))
    assert later is not None and planner.tree.best_goal == node.id


def test_edge_into_collision_node_skips_its_end():
    wall = AxisAlignedBox((0.9, 0, 0), (1.1, 4, 2))
    planner = make_planner([wall], start=rest(0, 2, 1), goal=rest(0, 3, 1))
    hit = planner.get_collision_node(Candidate(rest(2, 2, 1), 4.0))
    node = planner.connect_min_cost_path(hit)
    assert node is not None and node.kind is NodeKind.COLLISION
    # leaving from the surface is allowed
    back = planner.connect_min_cost_path(Candidate(rest(0.5, 2, 1), hit.time + 2.0))
    assert back is not None
    check_tree(planner.tree, [wall], planner.config)


# --------------------------------------------------------------------- rewire


def test_rewire_without_later_nodes_is_noop():
    planner = make_planner()
    node = add(planner, (1, 0, 0), 1.0, 0)
    planner.rewire(node)
    assert planner.counters["rewired"] == 0


def test_rewire_shortcut_shifts_subtree_costs():
    blocker = Sphere((1.25, 0.25, 0), 0.2)
    planner = make_planner([blocker])
    d = add(planner, (0, -1, 0), 1.0, 0)
    m = add(planner, (1, 1, 0), 3.0, d.id)
    c = add(planner, (2, 0, 0), 4.0, m.id)
    before_m, before_c = m.cost, c.cost
    assert before_m == pytest.approx(720 + rest_cost((0, -1, 0), (1, 1, 0), 2.0))
    n = planner.connect_min_cost_path(Candidate(rest(0.5, 0.5, 0), 1.0))
    planner.rewire(n)
    assert m.parent == n.id
    assert c.parent == m.id
    delta = m.cost - before_m
    assert delta < 0
    assert m.cost == pytest.approx(n.cost + rest_cost((0.5, 0.5, 0), (1, 1, 0), 2.0), rel=1e-12)
    assert c.cost - before_c == pytest.approx(delta, rel=1e-12)
    assert m.id not in planner.tree[d.id].children
    check_tree(planner.tree, [blocker], planner.config)


def test_rewire_never_increases_costs():
    planner = make_planner([Sphere((2, 0.2, 0), 0.5)], goal_sampling_rate=0.1, rng_seed=3)
    for _ in range(300):
        before = planner.tree.costs.copy()
        planner.step()
        after = planner.tree.costs[: len(before)]
        assert np.all(after <= before)


# ----------------------------------------------------------------------- plan


def test_obstacle_free_hop():
    cfg = PlannerConfig(HOP_BOUNDS, 6.0, rng_seed=7, budget=Iterations(2000), checkpoints=(250, 500, 1000, 2000))
    result = plan(HOP, cfg)
    assert result.solved and result.iterations == 2000
    times = [c.best_time for c in result.checkpoints if c.best_time is not None]
    assert times and all(a >= b for a, b in zip(times, times[1:]))
    assert [c.at for c in result.checkpoints] == [250, 500, 1000, 2000]
    traj = result.trajectory()
    assert traj.duration == result.t_end_best
    check_tree(result.tree, [], cfg)


def test_zero_budget_keeps_root_only():
    result = plan(HOP, PlannerConfig(HOP_BOUNDS, 6.0, budget=Iterations(0)))
    assert len(result.tree) == 1 and not result.solved and result.iterations == 0
    with pytest.raises(NoTrajectoryError):
        result.trajectory()


def test_wall_clock_budget():
    result = plan(HOP, PlannerConfig(HOP_BOUNDS, 6.0, budget=WallClock(0.05), checkpoints=(0.01, 0.05)))
    assert result.elapsed >= 0.05 and result.iterations > 0
    assert len(result.checkpoints) == 2


def test_start_inside_obstacle_rejected():
    with pytest.raises(PlannerError):
        make_planner([Sphere((0, 0, 0), 1)])
    with pytest.raises(PlannerError):
        make_planner([Sphere((0.5, 0, 0), 0.3)], r_veh=0.3)


def test_exclusive_mode_has_no_collision_nodes():
    cfg = PlannerConfig(TUNNEL_BOUNDS, 7.0, rng_seed=1, budget=Iterations(300), collision_inclusive=False)
    result = plan(TUNNEL, cfg)
    assert result.tree.count(NodeKind.COLLISION) == 0
    assert result.counters["discarded_colliding"] > 0


def test_inclusive_tunnel_grows_collision_nodes():
    cfg = PlannerConfig(TUNNEL_BOUNDS, 7.0, rng_seed=1, budget=Iterations(300))
    result = plan(TUNNEL, cfg)
    assert result.tree.count(NodeKind.COLLISION) > len(result.tree) / 2
    check_tree(result.tree, TUNNEL.obstacles, cfg)


@pytest.mark.parametrize("inclusive", [True, False])
def test_invariants_hold_every_iteration(inclusive):
    cfg = PlannerConfig(TUNNEL_BOUNDS, 7.0, rng_seed=11, budget=Iterations(150), collision_inclusive=inclusive)
    planner = Planner(TUNNEL.start, TUNNEL.goal, TUNNEL.obstacles, cfg)
    best = planner.tree.t_end_best
    for _ in range(150):
        planner.step()
        planner.check()
        assert planner.tree.t_end_best <= best
        best = planner.tree.t_end_best


def snapshot(tree):
    return [(n.state, n.time, n.kind, n.parent, n.cost, n.post_state) for n in tree.nodes]


def test_determinism():
    cfg = PlannerConfig(TUNNEL_BOUNDS, 7.0, rng_seed=(5, 2), budget=Iterations(200))
    a, b = plan(TUNNEL, cfg), plan(TUNNEL, cfg)
    assert snapshot(a.tree) == snapshot(b.tree)
    assert a.counters == b.counters


def test_modes_identical_without_obstacles():
    trees = []
    for inclusive in (True, False):
        cfg = PlannerConfig(HOP_BOUNDS, 6.0, rng_seed=4, budget=Iterations(300), collision_inclusive=inclusive)
        trees.append(snapshot(plan(HOP, cfg).tree))
    assert trees[0] == trees[1]


# ----------------------------------------------------------------- trajectory


def test_single_edge_trajectory():
    planner = make_planner()
    planner.connect_min_cost_path(Candidate(planner.goal, 5.0, NodeKind.GOAL))
    traj = extract_best_trajectory(planner.tree)
    assert len(traj.segments) == 1 and traj.duration == 5.0
    assert traj.impacts == []


def test_trajectory_through_collision_node():
    wall = AxisAlignedBox((0.9, 0, 0), (1.1, 4, 2))
    planner = make_planner([wall], start=rest(0, 2, 1), goal=rest(0, 3, 1))
    hit = planner.connect_min_cost_path(planner.get_collision_node(Candidate(rest(2, 2, 1), 4.0)))
    goal = Candidate(planner.goal, hit.time + 3.0, NodeKind.GOAL)
    assert planner.edge_status(hit.id, goal.state, goal.time, goal.kind) == kernels.OK
    planner.tree.insert(goal, hit.id, cost(connect(hit, goal)))
    traj = extract_best_trajectory(planner.tree)
    assert len(traj.segments) == 2
    first, second = traj.segments
    impact = second.impact
    assert impact is not None and impact.time == hit.time
    v_pre = evaluate(first.primitive, hit.time, 1)
    v_post = evaluate(second.primitive, hit.time, 1)
    expected = collision_model(VehicleState(hit.state.position, v_pre, hit.state.acceleration), hit.surface_normal)
    assert v_post == pytest.approx(expected.velocity, abs=1e-9)
    assert v_pre != pytest.approx(v_post)


def test_segment_endpoints_match_nodes():
    cfg = PlannerConfig(TUNNEL_BOUNDS, 7.0, rng_seed=2, budget=Iterations(300))
    result = plan(TUNNEL, cfg)
    assert result.solved
    for seg in result.trajectory().segments:
        a, b = (result.tree[i] for i in seg.node_ids)
        for order, (want_a, want_b) in enumerate(zip(a.departure, b.state)):
            assert evaluate(seg.primitive, a.time, order) == pytest.approx(want_a, abs=1e-9)
            assert evaluate(seg.primitive, b.time, order) == pytest.approx(want_b, abs=1e-9)


def test_tree_array_growth():
    tree = ExploringTree(rest(0, 0, 0), 5.0, capacity=2)
    for i in range(10):
        cand = Candidate(rest(i * 0.1, 0, 0), 0.1 * (i + 1))
        tree.insert(cand, i, cost(generate_primitive(tree[i].departure, tree[i].time, cand.state, cand.time)))
    assert len(tree) == 11 and tree.times[-1] == pytest.approx(1.0)
    check_tree(tree, recheck_edges=False)


def test_check_tree_detects_corruption():
    planner = make_planner()
    node = add(planner, (1, 0, 0), 1.0, 0)
    node.cost += 1.0
    with pytest.raises(AssertionError):
        check_tree(planner.tree)


def test_backend_selection_reported():
    assert kernels.BACKEND in ("compiled", "python")
