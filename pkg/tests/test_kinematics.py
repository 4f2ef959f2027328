from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momapos.errors import JointLimit, OutOfVerticalReach, ValidationError
from momapos.kinematics import (
    BasePose,
    RobotModel,
    arm_reach,
    arm_to_world,
    delta_r,
    fk_positions,
    forward_kinematics,
    load_robot,
    preset,
    save_robot,
    solve_ik,
    world_to_arm,
)

from .oracles import naive_fk

PI = math.pi


def chain(lengths, limits=None, body=0.7, base=(0.5, 0.5, 0.3)):
    limits = limits or [(-PI, PI)] * len(lengths)
    return RobotModel("chain", base, body, tuple((a, 0.0, 0.0, 0.0) for a in lengths), tuple(limits))


# ------------------------------------------------------------------ model


def test_model_validation():
    with pytest.raises(ValidationError):
        chain([0.5])
    with pytest.raises(ValidationError):
        chain([0.5, 0.5], limits=[(0, 0), (-1, 1)])
    with pytest.raises(ValidationError):
        chain([0.5, 0.5], base=(0.5, -0.5, 0.3))


def test_presets_roundtrip(tmp_path):
    for name in ("generic6", "short6", "tall6", "planar2"):
        r = preset(name)
        save_robot(r, tmp_path / f"{name}.json")
        assert load_robot(tmp_path / f"{name}.json") == r
    g = preset("generic6")
    assert g.base_dims == (0.5, 0.5, 0.3) and g.dof == 6


def test_yaw_wrapped():
    assert BasePose((0, 0), 3 * PI).yaw == pytest.approx(PI)
    assert BasePose((0, 0), -PI).yaw == pytest.approx(PI)


# ------------------------------------------------------------------ FK


def test_fk_two_link_examples():
    r = chain([0.5, 0.5])
    assert np.allclose(forward_kinematics(r, [0, 0])[0], (1.0, 0, 0), atol=1e-15)
    assert np.allclose(forward_kinematics(r, [PI / 2, 0])[0], (0, 1.0, 0), atol=1e-15)


def test_fk_joint_limit():
    r = chain([0.5, 0.5], limits=[(-1, 1), (-1, 1)])
    with pytest.raises(JointLimit):
        forward_kinematics(r, [1.5, 0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=6, max_size=6))
def test_fk_matches_naive_oracle(generic6, u):
    q = generic6.lower + np.array(u) * (generic6.upper - generic6.lower)
    p, R = forward_kinematics(generic6, q)
    po, Ro = naive_fk(generic6.dh, q)
    assert np.allclose(p, po, atol=1e-9)
    assert np.allclose(R, Ro, atol=1e-9)


# ------------------------------------------------------------------ reach


def test_reach_examples():
    assert arm_reach(chain([0.5, 0.5])) == pytest.approx(1.0, abs=1e-9)
    assert arm_reach(chain([0.7, 0.0])) == pytest.approx(0.7, abs=1e-9)


def test_reach_restricted_elbow_monte_carlo():
    r = chain([0.4, 0.35, 0.25], limits=[(-PI, PI), (0.0, PI / 2), (-PI, PI)])
    rng = np.random.default_rng(5)
    best = 0.0
    for _ in range(10):
        Q = rng.uniform(r.lower, r.upper, size=(1_000_000, 3))
        best = max(best, float(np.linalg.norm(fk_positions(r, Q), axis=1).max()))
    assert arm_reach(r) == pytest.approx(best, rel=0.01)
    assert arm_reach(r) >= best - 1e-9


def test_reach_monotone_in_nested_grids(generic6):
    vals = [arm_reach(generic6, per_joint=n, refine=False) for n in (3, 5, 9)]
    assert vals[0] <= vals[1] <= vals[2]


def test_reach_bounds_sampled_fk(generic6):
    rng = np.random.default_rng(1)
    Q = rng.uniform(generic6.lower, generic6.upper, size=(200_000, 6))
    assert np.linalg.norm(fk_positions(generic6, Q), axis=1).max() <= arm_reach(generic6) + 1e-12


# ------------------------------------------------------------------ delta_r


def _reach_one(h=0.7, base_z=0.3):
    return chain([0.5, 0.5], body=h, base=(0.5, 0.5, base_z))


def test_delta_r_examples():
    r = _reach_one()
    assert delta_r(r, 0.3, 1.0) == pytest.approx(1.0)
    assert delta_r(r, 0.3, 1.6) == pytest.approx(0.8)
    with pytest.raises(OutOfVerticalReach):
        delta_r(r, 0.3, 1.0 + 0.7, reach=0.5)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 0.999), st.floats(0.0, 0.999))
def test_delta_r_even_and_decreasing(a, b):
    r = _reach_one()
    up, down = delta_r(r, 0.3, 1.0 + a), delta_r(r, 0.3, 1.0 - a)
    assert up == pytest.approx(down, abs=1e-12)
    if abs(a - b) > 1e-6:
        lo, hi = sorted((a, b))
        assert delta_r(r, 0.3, 1.0 + lo) > delta_r(r, 0.3, 1.0 + hi)


# ------------------------------------------------------------------ IK


def test_ik_consistency(generic6):
    rng = np.random.default_rng(2)
    for _ in range(10):
        q0 = rng.uniform(generic6.lower, generic6.upper)
        target = forward_kinematics(generic6, q0)[0]
        q = solve_ik(generic6, target, tol=0.01, restarts=10, seed=3)
        assert q is not None
        assert np.linalg.norm(forward_kinematics(generic6, q)[0] - target) <= 0.01
        assert generic6.within_limits(q)


def test_ik_beyond_reach():
    assert solve_ik(chain([0.5, 0.5]), [1.2, 0.0, 0.0], seed=0) is None


def test_ik_deterministic(generic6):
    t = [0.4, 0.2, 0.3]
    assert np.array_equal(solve_ik(generic6, t, seed=[1, 2]), solve_ik(generic6, t, seed=[1, 2]))


def test_ik_matches_annulus(planar2):
    rng = np.random.default_rng(7)
    agree = 0
    for _ in range(1000):
        d = rng.uniform(0.0, 1.0)
        a = rng.uniform(-PI, PI)
        target = [d * math.cos(a), d * math.sin(a), 0.0]
        # reachable within tol iff the annulus is within tol of the target
        expect = 0.2 - 0.01 <= d <= 0.8 + 0.01
        q = solve_ik(planar2, target, tol=0.01, restarts=10, seed=int(rng.integers(1 << 30)))
        agree += (q is not None) == expect
    assert agree >= 990


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-0.6, 1.0), st.integers(0, 1000))
def test_ik_success_implies_residual(generic6, x, y, z, seed):
    q = solve_ik(generic6, [x, y, z], tol=0.01, restarts=3, seed=seed)
    if q is not None:
        assert np.linalg.norm(forward_kinematics(generic6, q)[0] - np.array([x, y, z])) <= 0.01


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-PI, PI), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_frame_roundtrip(generic6, x, y, yaw, p):
    base = BasePose((x, y), yaw)
    assert np.allclose(world_to_arm(generic6, base, arm_to_world(generic6, base, p)), p, atol=1e-9)
