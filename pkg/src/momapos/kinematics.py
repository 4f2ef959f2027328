"""Robot model, DH forward kinematics, reach, and position-only IK.

Robot files are JSON::

    {"name": "generic6",
     "base": [0.5, 0.5, 0.3],          # r^x, r^y, r^z
     "body_height": 0.7,               # r^h
     "dh": [[a, alpha, d, theta_offset], ...],
     "limits": [[lo, hi], ...],
     "home": [q1, ...]}                # optional, defaults to mid-range

The arm base sits at (x, y, r^z + r^h) above the base centre, with its x
axis along the base yaw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from numba import njit
from scipy.optimize import minimize

from .errors import JointLimit, OutOfVerticalReach, ParseError, ValidationError
from .geometry import wrap_angle

LIMIT_TOL = 1e-9


@dataclass(frozen=True)
class RobotModel:
    name: str
    base_dims: tuple
    body_height: float
    dh: tuple  # rows (a, alpha, d, theta_offset)
    limits: tuple  # rows (lo, hi)
    home_q: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "base_dims", tuple(float(v) for v in self.base_dims))
        object.__setattr__(self, "dh", tuple(tuple(float(v) for v in row) for row in self.dh))
        object.__setattr__(self, "limits", tuple(tuple(float(v) for v in row) for row in self.limits))
        object.__setattr__(self, "body_height", float(self.body_height))
        if len(self.base_dims) != 3 or min(self.base_dims) <= 0 or self.body_height <= 0:
            raise ValidationError("base dims and body height must be positive")
        if len(self.dh) < 2:
            raise ValidationError("arm needs at least two revolute joints")
        if len(self.limits) != len(self.dh):
            raise ValidationError("one limit row per DH row")
        for row in self.dh:
            if len(row) != 4:
                raise ValidationError("DH rows are (a, alpha, d, theta_offset)")
        for lo, hi in self.limits:
            if not lo < hi:
                raise ValidationError("joint limits need lo < hi")
        if self.home_q is not None:
            object.__setattr__(self, "home_q", tuple(float(v) for v in self.home_q))
            if len(self.home_q) != len(self.dh) or not self.within_limits(self.home_q):
                raise ValidationError("home configuration must have one in-limit value per joint")

    @property
    def dof(self) -> int:
        return len(self.dh)

    @property
    def lower(self) -> np.ndarray:
        return np.array([l for l, _ in self.limits])

    @property
    def upper(self) -> np.ndarray:
        return np.array([h for _, h in self.limits])

    @property
    def mount_height(self) -> float:
        """Height of the arm base above the floor, r^z + r^h."""
        return self.base_dims[2] + self.body_height

    def home(self) -> np.ndarray:
        if self.home_q is not None:
            return np.array(self.home_q)
        return (self.lower + self.upper) / 2.0

    def within_limits(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - LIMIT_TOL) and np.all(q <= self.upper + LIMIT_TOL))

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "base": list(self.base_dims),
            "body_height": self.body_height,
            "dh": [list(r) for r in self.dh],
            "limits": [list(r) for r in self.limits],
        }
        if self.home_q is not None:
            d["home"] = list(self.home_q)
        return d


@dataclass(frozen=True)
class BasePose:
    xy: tuple
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "xy", (float(self.xy[0]), float(self.xy[1])))
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @classmethod
    def facing(cls, xy, target_xy) -> "BasePose":
        return cls(xy, np.arctan2(target_xy[1] - xy[1], target_xy[0] - xy[0]))

    def to_dict(self) -> dict:
        return {"x": self.xy[0], "y": self.xy[1], "yaw": self.yaw}


def robot_from_dict(d: dict) -> RobotModel:
    try:
        return RobotModel(
            name=d.get("name", "robot"),
            base_dims=tuple(d["base"]),
            body_height=d["body_height"],
            dh=tuple(tuple(r) for r in d["dh"]),
            limits=tuple(tuple(r) for r in d["limits"]),
            home_q=tuple(d["home"]) if d.get("home") is not None else None,
        )
    except (KeyError, TypeError) as e:
        raise ParseError(f"malformed robot description: {e}") from None


def load_robot(path) -> RobotModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return robot_from_dict(json.loads(text))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e}") from None


def save_robot(robot: RobotModel, path) -> None:
    Path(path).write_text(json.dumps(robot.to_dict(), indent=2) + "\n", encoding="utf-8")


PRESETS = ("generic6", "short6", "tall6", "planar2")


def preset(name: str) -> RobotModel:
    """Shipped robot presets (see ``momapos/data``)."""
    if name not in PRESETS:
        raise KeyError(f"unknown robot preset {name!r}; choose from {PRESETS}")
    text = resources.files("momapos.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return robot_from_dict(json.loads(text))


# ---------------------------------------------------------------- kinematics


@lru_cache(maxsize=64)
def _dh_cached(robot: RobotModel):
    dh = np.array(robot.dh)
    return tuple(np.ascontiguousarray(dh[:, k]) for k in range(4))


def _dh_arrays(robot: RobotModel):
    return _dh_cached(robot)


@njit(cache=True)
def _fk_kernel(a, alpha, d, off, Q, origins, rots):
    m, n = Q.shape
    R = np.empty((3, 3))
    N = np.empty((3, 3))
    for k in range(m):
        R[:] = 0.0
        R[0, 0] = R[1, 1] = R[2, 2] = 1.0
        px = py = pz = 0.0
        rots[k, 0] = R
        for i in range(n):
            ct, st = np.cos(Q[k, i] + off[i]), np.sin(Q[k, i] + off[i])
            ca, sa = np.cos(alpha[i]), np.sin(alpha[i])
            tx, ty, tz = a[i] * ct, a[i] * st, d[i]
            px += R[0, 0] * tx + R[0, 1] * ty + R[0, 2] * tz
            py += R[1, 0] * tx + R[1, 1] * ty + R[1, 2] * tz
            pz += R[2, 0] * tx + R[2, 1] * ty + R[2, 2] * tz
            # R <- R @ Rz(theta) Rx(alpha)
            for r in range(3):
                N[r, 0] = R[r, 0] * ct + R[r, 1] * st
                N[r, 1] = (-R[r, 0] * st + R[r, 1] * ct) * ca + R[r, 2] * sa
                N[r, 2] = (R[r, 0] * st - R[r, 1] * ct) * sa + R[r, 2] * ca
            R[:] = N
            origins[k, i + 1, 0] = px
            origins[k, i + 1, 1] = py
            origins[k, i + 1, 2] = pz
            rots[k, i + 1] = R


def fk_frames(robot: RobotModel, Q) -> tuple[np.ndarray, np.ndarray]:
    """Frame origins and rotations for a batch of joint vectors.

    Returns ``origins`` of shape (m, n+1, 3) and ``rots`` of shape
    (m, n+1, 3, 3); index 0 is the arm base frame.  Each link applies
    Rz(theta) Tz(d) Tx(a) Rx(alpha).
    """
    Q = np.ascontiguousarray(np.atleast_2d(np.asarray(Q, dtype=float)))
    m, n = Q.shape
    if n != robot.dof:
        raise ValueError(f"expected {robot.dof} joint values per row, got {n}")
    a, alpha, d, off = _dh_arrays(robot)
    origins = np.zeros((m, n + 1, 3))
    rots = np.empty((m, n + 1, 3, 3))
    _fk_kernel(a, alpha, d, off, Q, origins, rots)
    return origins, rots


def fk_positions(robot: RobotModel, Q) -> np.ndarray:
    return fk_frames(robot, Q)[0][:, -1]


def forward_kinematics(robot: RobotModel, q) -> tuple[np.ndarray, np.ndarray]:
    """End-effector (position, rotation matrix) in the arm base frame."""
    q = np.asarray(q, dtype=float)
    if q.shape != (robot.dof,):
        raise ValueError(f"expected {robot.dof} joint values, got shape {q.shape}")
    if not robot.within_limits(q):
        raise JointLimit(f"joint vector {q} outside limits")
    origins, rots = fk_frames(robot, q[None])
    return origins[0, -1], rots[0, -1]


def link_lengths(robot: RobotModel) -> np.ndarray:
    a, _, d, _ = _dh_arrays(robot)
    return np.hypot(a, d)


@lru_cache(maxsize=64)
def _link_weights(robot: RobotModel, spacing: float) -> np.ndarray:
    """(P, n+1) matrix mapping frame origins to evenly spaced link points."""
    rows = []
    for i, L in enumerate(link_lengths(robot)):
        k = max(int(np.ceil(L / spacing)), 1)
        s = np.linspace(0.0, 1.0, k + 1)
        if i > 0:
            s = s[1:]
        w = np.zeros((len(s), robot.dof + 1))
        w[:, i] = 1.0 - s
        w[:, i + 1] = s
        rows.append(w)
    return np.concatenate(rows)


def link_points(robot: RobotModel, Q, spacing: float = 0.02) -> np.ndarray:
    """Points along every link (between consecutive frame origins), arm frame.

    Shape (m, P, 3); consecutive points on a link are at most ``spacing`` apart.
    """
    origins, _ = fk_frames(robot, Q)
    return np.einsum("pk,mkd->mpd", _link_weights(robot, float(spacing)), origins)


# ----------------------------------------------------------------- reach


def _grid_counts(dof: int, per_joint: int, cap: int) -> int:
    n = per_joint
    while n > 2 and n**dof > cap:
        n -= 1
    return n


@lru_cache(maxsize=64)
def arm_reach(robot: RobotModel, per_joint: int = 7, cap: int = 1_000_000, refine: bool = True) -> float:
    """Maximum end-effector distance from the arm base.

    A joint grid (``per_joint`` samples per joint, coarsened until the grid
    holds at most ``cap`` points) gives a starting estimate; bounded local
    ascent from the best grid points then closes the gap to the true maximum.
    """
    n = _grid_counts(robot.dof, per_joint, cap)
    axes = [np.linspace(lo, hi, n) for lo, hi in robot.limits]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, robot.dof)
    best = 0.0
    norms = np.empty(len(grid))
    for s in range(0, len(grid), 100_000):
        norms[s : s + 100_000] = np.linalg.norm(fk_positions(robot, grid[s : s + 100_000]), axis=1)
    best = float(norms.max())
    if refine:
        bounds = list(robot.limits)

        def neg(q):
            return -float(np.sum(fk_positions(robot, q[None])[0] ** 2))

        for idx in np.argsort(-norms)[:5]:
            res = minimize(neg, grid[idx], method="L-BFGS-B", bounds=bounds)
            q = np.clip(res.x, robot.lower, robot.upper)
            best = max(best, float(np.linalg.norm(fk_positions(robot, q[None])[0])))
    return best


def delta_r(robot: RobotModel, base_z: float, target_z: float, reach: float | None = None) -> float:
    """Horizontal reach radius at the target's height."""
    r = arm_reach(robot) if reach is None else reach
    dz = target_z - base_z - robot.body_height
    rad = r * r - dz * dz
    if rad < 0:
        raise OutOfVerticalReach(f"vertical offset {abs(dz):.3f} m exceeds arm reach {r:.3f} m")
    return float(np.sqrt(rad))


# ---------------------------------------------------------------------- IK


def position_jacobian(robot: RobotModel, Q) -> tuple[np.ndarray, np.ndarray]:
    """End-effector positions (m, 3) and position Jacobians (m, 3, n)."""
    origins, rots = fk_frames(robot, Q)
    pe = origins[:, -1]
    z = rots[:, :-1, :, 2]  # joint i turns about z of frame i
    J = np.cross(z, pe[:, None, :] - origins[:, :-1])
    return pe, np.transpose(J, (0, 2, 1))


def solve_ik(
    robot: RobotModel,
    target,
    tol: float = 0.01,
    restarts: int = 10,
    seed=0,
    q_init=None,
    damping: float = 0.05,
    max_iters: int = 200,
    accept=None,
    all_solutions: bool = False,
):
    """Damped-least-squares position IK from seeded random starts.

    A restart that reaches ``tol`` stops; if ``accept`` is given the
    solution must also pass ``accept(q)``.  With ``q_init`` that start is
    tried alone first and wins if accepted; otherwise the random restarts
    run to the end and the accepted solution nearest ``q_init`` is returned,
    which keeps consecutive solutions on one branch.  Without ``q_init`` the
    random restarts iterate as a batch and the first accepted solution is
    returned (ties within an iteration go to the lowest restart index).
    Returns None when every restart fails.  With ``all_solutions`` every
    accepted solution is returned in restart order, ``q_init`` first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    target = np.asarray(target, dtype=float)
    if np.linalg.norm(target) > arm_reach(robot) + tol:
        return [] if all_solutions else None
    rng = np.random.default_rng(seed)
    lo, hi = robot.lower, robot.upper
    Q = rng.uniform(lo, hi, size=(restarts, robot.dof))
    args = (robot, target, tol, damping * damping, max_iters, accept)
    if q_init is None:
        sols = _dls_batch(Q, *args, first_only=not all_solutions)
        if all_solutions:
            return [q for _, q in sols]
        return sols[0][1] if sols else None
    q0 = np.clip(np.asarray(q_init, dtype=float), lo, hi)
    own = _dls_batch(q0[None], *args, first_only=True)
    if own and not all_solutions:
        return own[0][1]
    rest = _dls_batch(Q[1:], *args, first_only=False)
    if all_solutions:
        return [q for _, q in own] + [q for _, q in rest]
    if not rest:
        return None
    d = [np.linalg.norm(q - q0) for _, q in rest]
    return rest[int(np.argmin(d))][1]


def _dls_batch(Q, robot, target, tol, lam2, max_iters, accept, first_only):
    """Iterate DLS on every row of Q; returns [(row, q)] of accepted solutions, row order."""
    Q = np.array(Q, dtype=float)
    lo, hi = robot.lower, robot.upper
    active = np.ones(len(Q), dtype=bool)
    sols = []
    for it in range(max_iters + 1):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        pe, J = position_jacobian(robot, Q[idx])
        err = target - pe
        ok = np.linalg.norm(err, axis=1) <= tol
        for r in idx[ok]:
            active[r] = False
            if accept is None or accept(Q[r]):
                sols.append((int(r), Q[r].copy()))
                if first_only:
                    return sols
        keep = ~ok
        if it == max_iters or not keep.any():
            break
        Jk, ek = J[keep], err[keep]
        JJt = Jk @ np.transpose(Jk, (0, 2, 1)) + lam2 * np.eye(3)
        dq = np.einsum("mji,mj->mi", Jk, np.linalg.solve(JJt, ek[..., None])[..., 0])
        step = np.linalg.norm(dq, axis=1, keepdims=True)
        dq = dq * np.minimum(1.0, 0.5 / np.maximum(step, 1e-12))
        Q[idx[keep]] = np.clip(Q[idx[keep]] + dq, lo, hi)
    sols.sort(key=lambda t: t[0])
    return sols


# ------------------------------------------------------------ frame helpers


def arm_to_world(robot: RobotModel, base: BasePose, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    c, s = np.cos(base.yaw), np.sin(base.yaw)
    x = c * pts[..., 0] - s * pts[..., 1] + base.xy[0]
    y = s * pts[..., 0] + c * pts[..., 1] + base.xy[1]
    z = pts[..., 2] + robot.mount_height
    return np.stack([x, y, z], axis=-1)


def world_to_arm(robot: RobotModel, base: BasePose, pts, mount_height: float | None = None) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    h = robot.mount_height if mount_height is None else mount_height
    dx = pts[..., 0] - base.xy[0]
    dy = pts[..., 1] - base.xy[1]
    c, s = np.cos(base.yaw), np.sin(base.yaw)
    return np.stack([c * dx + s * dy, -s * dx + c * dy, pts[..., 2] - h], axis=-1)
