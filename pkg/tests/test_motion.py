from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momapos.errors import GoalOccupied, Infeasible, InvalidEndpoint, NoPath, NoTrajectory, StartOccupied
from momapos.geometry import Aabb
from momapos.kinematics import BasePose, forward_kinematics
from momapos.motion import (
    Obstacles,
    RRTParams,
    arm_collides,
    arm_rrt,
    check_manipulation_feasibility,
    free_components,
    manipulation_world,
    nav_path,
    validate_trajectory,
)
from momapos.placement import candidate_area, manipulation_targets, potential_map
from momapos.scene import OccupancyGrid, scene_from_dict
from momapos.suites import box_object

from .oracles import bfs_path_length, flood_reachable


def grid(cells, res=0.1):
    return OccupancyGrid(res, (0.0, 0.0), np.asarray(cells, dtype=bool))


def centre(ix, iy, res=0.1):
    return ((ix + 0.5) * res, (iy + 0.5) * res)


# ------------------------------------------------------------------ navigation


def test_straight_line_length():
    g = grid(np.zeros((5, 20)))
    p = nav_path(g, centre(2, 2), centre(12, 2))
    assert p.length == pytest.approx(1.0)
    assert np.allclose(p.points[0], centre(2, 2)) and np.allclose(p.points[-1], centre(12, 2))
    d = nav_path(g, centre(0, 0), centre(4, 4))
    assert d.length == pytest.approx(0.4 * math.sqrt(2))


def test_sealed_goal():
    c = np.zeros((9, 9), dtype=bool)
    c[3:6, 3:6] = True
    c[4, 4] = False
    with pytest.raises(NoPath):
        nav_path(grid(c), centre(0, 0), centre(4, 4))


def test_occupied_endpoints():
    c = np.zeros((4, 4), dtype=bool)
    c[0, 0] = c[3, 3] = True
    with pytest.raises(StartOccupied):
        nav_path(grid(c), centre(0, 0), centre(2, 2))
    with pytest.raises(GoalOccupied):
        nav_path(grid(c), centre(1, 1), centre(3, 3))
    with pytest.raises(ValueError):
        nav_path(grid(c), centre(1, 1), (5.0, 5.0))


def test_no_corner_cutting():
    c = np.array([[0, 1], [1, 0]], dtype=bool)
    with pytest.raises(NoPath):
        nav_path(grid(c), centre(0, 0), centre(1, 1))


def test_l_corridor_matches_oracle():
    c = np.ones((12, 12), dtype=bool)
    c[1:3, 1:11] = False  # horizontal leg
    c[1:11, 9:11] = False  # vertical leg
    start, goal = (1, 1), (10, 10)
    p = nav_path(grid(c), centre(*start), centre(*goal))
    assert p.length == pytest.approx(bfs_path_length(c, start, goal, 0.1))


def _check_path_cells(c, pts, res=0.1):
    idx = np.floor(pts / res).astype(int)
    assert not c[idx[:, 1], idx[:, 0]].any()
    steps = np.abs(np.diff(idx, axis=0))
    assert steps.max() <= 1 and (steps.sum(axis=1) > 0).all()
    for (x0, y0), (x1, y1) in zip(idx[:-1], idx[1:]):
        if x0 != x1 and y0 != y1:
            assert not c[y0, x1] and not c[y1, x0]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 0.45))
def test_nav_matches_dijkstra_oracle(seed, density):
    rng = np.random.default_rng(seed)
    c = rng.random((10, 14)) < density
    c[0, 0] = c[9, 13] = False
    oracle = bfs_path_length(c, (0, 0), (13, 9), 0.1)
    if oracle is None:
        with pytest.raises(NoPath):
            nav_path(grid(c), centre(0, 0), centre(13, 9))
        return
    p = nav_path(grid(c), centre(0, 0), centre(13, 9))
    assert p.length == pytest.approx(oracle, abs=1e-9)
    assert p.length >= math.hypot(1.3, 0.9) - 1e-9
    _check_path_cells(c, p.points)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 0.6))
def test_components_match_flood_fill(seed, density):
    rng = np.random.default_rng(seed)
    c = rng.random((8, 9)) < density
    c[0, 0] = False
    labels = free_components(grid(c))
    seen = flood_reachable(c, (0, 0))
    same = {(x, y) for y in range(8) for x in range(9) if labels[y, x] == labels[0, 0]}
    assert same == seen
    # 8-connected moves without corner cutting reach exactly the same cells
    for y in range(8):
        for x in range(9):
            if not c[y, x]:
                assert (bfs_path_length(c, (0, 0), (x, y), 1.0) is not None) == ((x, y) in seen)


# ------------------------------------------------------------------ arm RRT


BLOCK = Aabb((0.6, -0.05, -0.05), (0.9, 0.05, 0.05))


def test_rrt_identity(planar2):
    t = arm_rrt(planar2, [0.3, 0.2], [0.3, 0.2], [])
    assert len(t) == 1


def test_rrt_free_space_is_straight(planar2):
    t = arm_rrt(planar2, [-1.0, 0.0], [1.0, 0.5], [], RRTParams(step=0.1))
    assert np.allclose(t.configs[0], (-1.0, 0.0)) and np.allclose(t.configs[-1], (1.0, 0.5))
    assert np.abs(np.diff(t.configs, axis=0)).max() <= 0.1 + 1e-12
    # collinear in joint space
    d = t.configs - t.configs[0]
    assert np.allclose(d[:, 0] * 0.5, d[:, 1] * 2.0)


def test_rrt_detour_revalidates(planar2):
    qs, qg = np.array([-1.0, 0.0]), np.array([1.0, 0.0])
    mid = np.linspace(qs, qg, 41)
    assert arm_collides(planar2, mid, Obstacles([BLOCK])).any()
    for seed in range(3):
        t = arm_rrt(planar2, qs, qg, [BLOCK], RRTParams(seed=seed))
        assert np.allclose(t.configs[0], qs) and np.allclose(t.configs[-1], qg)
        assert np.abs(np.diff(t.configs, axis=0)).max() <= 0.1 + 1e-9
        assert validate_trajectory(planar2, t.configs, [BLOCK])
        # straight joint steps are not enough: check the hand path too
        tips = np.array([forward_kinematics(planar2, q)[0] for q in t.configs])
        assert not np.any(np.all((tips >= BLOCK.lo) & (tips <= BLOCK.hi), axis=1))


def test_rrt_deterministic(planar2):
    a = arm_rrt(planar2, [-1.0, 0.0], [1.0, 0.0], [BLOCK], RRTParams(seed=4))
    b = arm_rrt(planar2, [-1.0, 0.0], [1.0, 0.0], [BLOCK], RRTParams(seed=4))
    assert np.array_equal(a.configs, b.configs)


def test_rrt_endpoint_errors(planar2):
    with pytest.raises(InvalidEndpoint):
        arm_rrt(planar2, [5.0, 0.0], [0.0, 0.0], [])
    with pytest.raises(InvalidEndpoint):
        arm_rrt(planar2, [0.0, 0.0], [1.0, 0.0], [Aabb((0.7, -0.05, -0.05), (0.9, 0.05, 0.05))])


def test_rrt_budget_exhausted(planar2):
    with pytest.raises(NoTrajectory):
        arm_rrt(planar2, [-1.0, 0.0], [1.0, 0.0], [BLOCK], RRTParams(max_iters=0))


def test_rrt_success_kept_with_larger_budget(planar2):
    found = []
    for iters in (5, 20, 100, 1000):
        try:
            arm_rrt(planar2, [-1.0, 0.0], [1.0, 0.0], [BLOCK], RRTParams(max_iters=iters, seed=1))
            found.append(True)
        except NoTrajectory:
            found.append(False)
    assert found == sorted(found) and found[-1]


def test_validate_catches_collision(planar2):
    assert not validate_trajectory(planar2, [[-1.0, 0.0], [1.0, 0.0]], [BLOCK])
    assert not validate_trajectory(planar2, [[0.0, 0.0], [9.0, 0.0]], [])


# ------------------------------------------------------------------ manipulation


def test_single_waypoint_empty_scene(generic6):
    s = scene_from_dict({"floor": {"min": [0, 0], "max": [4, 4]},
                         "objects": [box_object("cup", (2.45, 1.95, 0.95), (2.55, 2.05, 1.05))], "relations": []})
    base = BasePose.facing((2.0, 2.0), (2.5, 2.0))
    t = check_manipulation_feasibility(generic6, base, [(2.5, 2.0, 1.0)], s, [], "cup", seed=0)
    assert t.waypoint_index[-1] == len(t) - 1
    assert validate_trajectory(generic6, t.configs, [], base)


def test_waypoint_beyond_reach(kitchen, generic6):
    tp, W = manipulation_targets(kitchen, "fridge")
    with pytest.raises(Infeasible) as e:
        check_manipulation_feasibility(generic6, BasePose.facing((1.45, 2.0), tp[:2]), W, kitchen, kitchen.ids, "fridge", seed=0)
    assert e.value.index == 0


def test_base_inside_door_sweep(kitchen, generic6):
    tp, W = manipulation_targets(kitchen, "fridge")
    with pytest.raises(Infeasible):
        check_manipulation_feasibility(generic6, BasePose.facing((1.45, 3.3), tp[:2]), W, kitchen, kitchen.ids, "fridge", seed=0)


def test_potential_map_maximum_is_feasible(kitchen, generic6, irm6):
    tp, W = manipulation_targets(kitchen, "fridge")
    area = candidate_area(kitchen, kitchen.ids, generic6, tp, "fridge")
    best = potential_map(area, irm6, generic6, W).best()
    base = BasePose.facing(best, tp[:2])
    t = check_manipulation_feasibility(generic6, base, W, kitchen, kitchen.ids, "fridge", seed=0)
    assert len(t.waypoint_index) == len(W)
    assert all(t.valid)
    # every segment re-validates against the true geometry it was planned in
    world = manipulation_world(kitchen, kitchen.ids, "fridge", len(W))
    marks = [0] + list(t.waypoint_index)
    for j in range(len(W)):
        seg = t.configs[marks[j] : marks[j + 1] + 1]
        assert validate_trajectory(generic6, seg, world.at(max(j - 1, 0)), base)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_rrt_trajectories_always_revalidate(planar2, seed):
    rng = np.random.default_rng(seed)
    boxes = []
    for _ in range(3):
        c = rng.uniform(-0.8, 0.8, 2)
        h = rng.uniform(0.02, 0.12, 2)
        boxes.append(Aabb((*(c - h), -0.05), (*(c + h), 0.05)))
    qs, qg = rng.uniform(-np.pi, np.pi, 2), rng.uniform(-np.pi, np.pi, 2)
    try:
        t = arm_rrt(planar2, qs, qg, boxes, RRTParams(seed=seed, max_iters=300))
    except (InvalidEndpoint, NoTrajectory):
        return
    assert validate_trajectory(planar2, t.configs, boxes)
