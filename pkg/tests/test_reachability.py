from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momapos.errors import FormatError
from momapos.kinematics import BasePose, RobotModel, forward_kinematics, solve_ik
from momapos.reachability import build_irm, irm_query, irm_query_many, load_irm, save_irm

from .oracles import in_annulus

PI = math.pi


def nonzero_centers(irm):
    idx = np.argwhere(irm.counts > 0)
    return irm.voxel_center(idx), idx


def test_single_sample(generic6):
    irm = build_irm(generic6, samples=1, voxel_size=0.05, seed=3)
    assert irm.info()["nonzero_voxels"] == 1
    assert irm.max_count == 1 and irm.counts.sum() == 1


def test_bad_arguments(generic6):
    with pytest.raises(ValueError):
        build_irm(generic6, samples=0)
    with pytest.raises(ValueError):
        build_irm(generic6, voxel_size=0.0)


def test_one_link_gives_a_circle():
    r = RobotModel("stick", (0.5, 0.5, 0.3), 0.7, ((0.5, 0, 0, 0), (0.0, 0, 0, 0)), ((-PI, PI), (-PI, PI)))
    irm = build_irm(r, samples=50_000, voxel_size=0.02, seed=0)
    c, _ = nonzero_centers(irm)
    diag = 0.02 * math.sqrt(3)
    rad = np.hypot(c[:, 0], c[:, 1])
    assert np.all(np.abs(rad - 0.5) <= diag)
    assert np.all(np.abs(c[:, 2]) <= diag)
    # the ring is closed: every angular sector is hit
    ang = np.arctan2(c[:, 1], c[:, 0])
    assert len(np.unique(np.floor((ang + PI) / (2 * PI) * 36))) == 36


def test_planar_annulus(irm2):
    diag = irm2.voxel_size * math.sqrt(3)
    c, _ = nonzero_centers(irm2)
    assert all(in_annulus(p, 0.2, 0.8, tol=diag) for p in c)
    rng = np.random.default_rng(11)
    rad = np.sqrt(rng.uniform(0.2**2, 0.8**2, 10_000))
    ang = rng.uniform(-PI, PI, 10_000)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang), np.zeros_like(rad)], axis=1)
    assert np.mean(irm2.score_local(pts) > 0) >= 0.99


def test_save_load_roundtrip(irm2, tmp_path):
    p = tmp_path / "m.irm"
    save_irm(irm2, p)
    back = load_irm(p)
    assert np.array_equal(back.counts, irm2.counts)
    assert back.voxel_size == irm2.voxel_size and back.robot_name == irm2.robot_name
    assert back.extent == irm2.extent and back.build_seed == irm2.build_seed
    assert back.info() == irm2.info()


def test_corrupt_files_raise(irm2, tmp_path):
    p = tmp_path / "m.irm"
    save_irm(irm2, p)
    data = p.read_bytes()
    for bad in (data[:-4], data[:10], b"XXXX" + data[4:], data + b"\0\0\0\0"):
        q = tmp_path / "bad.irm"
        q.write_bytes(bad)
        with pytest.raises(FormatError):
            load_irm(q)


def test_more_samples_never_lose_hits(planar2):
    small = build_irm(planar2, samples=150_000, voxel_size=0.02, seed=4)
    big = build_irm(planar2, samples=300_000, voxel_size=0.02, seed=4)
    assert np.all(big.counts >= small.counts)
    assert big.counts.sum() > small.counts.sum()


def test_build_deterministic(planar2):
    a = build_irm(planar2, samples=120_000, voxel_size=0.05, seed=9)
    b = build_irm(planar2, samples=120_000, voxel_size=0.05, seed=9)
    assert np.array_equal(a.counts, b.counts)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-PI, PI), st.integers(0, 10**6))
def test_query_is_rotation_consistent(irm6, generic6, x, y, yaw, k):
    # pick a voxel centre in the arm frame, place it in the world for this base
    idx = np.unravel_index(k % irm6.counts.size, irm6.dims)
    local = irm6.voxel_center(idx)
    base = BasePose((x, y), yaw)
    c, s = math.cos(yaw), math.sin(yaw)
    world = [x + c * local[0] - s * local[1], y + s * local[0] + c * local[1], local[2] + generic6.mount_height]
    got = irm_query(irm6, base, generic6.mount_height, world)
    assert got == pytest.approx(irm6.counts[idx] / irm6.max_count, abs=1e-12)
    many = irm_query_many(irm6, [[x, y]], [yaw], generic6.mount_height, [world])
    assert many[0, 0] == pytest.approx(got, abs=1e-12)


def test_scores_outside_extent_are_zero(irm6):
    far = irm6.extent.hi + 0.1
    assert irm6.score_local(far[None])[0] == 0.0


def test_hit_voxels_are_reachable_by_ik(irm6, generic6):
    c, idx = nonzero_centers(irm6)
    rng = np.random.default_rng(8)
    pick = rng.choice(len(c), 300, replace=False)
    tol = irm6.voxel_size * math.sqrt(3) / 2
    ok = 0
    for k in pick:
        q = solve_ik(generic6, c[k], tol=tol, restarts=10, seed=int(k))
        ok += q is not None and np.linalg.norm(forward_kinematics(generic6, q)[0] - c[k]) <= tol
    assert ok / len(pick) >= 0.95
