"""Grid navigation (A*) and joint-space RRT for the manipulation check."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import ndimage

from .errors import GoalOccupied, Infeasible, InvalidEndpoint, NoPath, NoTrajectory, StartOccupied
from .geometry import Aabb, RotatedBox, rotate_points, rotation_matrix
from .kinematics import (
    BasePose,
    RobotModel,
    _link_weights,
    arm_to_world,
    fk_frames,
    link_lengths,
    link_points,
    solve_ik,
    world_to_arm,
)
from .placement import footprint_half_extents
from .scene import DEFAULT_WAYPOINTS, OccupancyGrid, Scene, panel_at, swept_obstacles

SQRT2 = float(np.sqrt(2.0))
LINK_SPACING = 0.02  # link point spacing used while planning
IK_RESTARTS = 50  # keeps a reachable pose from failing on an unlucky seed


# ------------------------------------------------------------ navigation


@dataclass
class NavPath:
    points: np.ndarray  # (n, 2) cell centres from start to goal
    length: float

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("x,y\n")
            for x, y in self.points:
                f.write(f"{x:.4f},{y:.4f}\n")


def _neighbours(cells, ix, iy):
    ny, nx = cells.shape
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        jx, jy = ix + dx, iy + dy
        if 0 <= jx < nx and 0 <= jy < ny and not cells[jy, jx]:
            yield jx, jy, 1.0
    for dx, dy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        jx, jy = ix + dx, iy + dy
        # diagonal moves may not cut an occupied corner
        if 0 <= jx < nx and 0 <= jy < ny and not cells[jy, jx] and not cells[iy, jx] and not cells[jy, ix]:
            yield jx, jy, SQRT2


def nav_path(grid: OccupancyGrid, start, goal) -> NavPath:
    """A* over 8-connected free cells with Euclidean step costs."""
    sx, sy = grid.cell_of(start)
    gx, gy = grid.cell_of(goal)
    if not grid.inside(sx, sy) or not grid.inside(gx, gy):
        raise ValueError("start and goal must lie inside the grid")
    cells = grid.cells
    if cells[sy, sx]:
        raise StartOccupied(f"start cell {(sx, sy)} is occupied")
    if cells[gy, gx]:
        raise GoalOccupied(f"goal cell {(gx, gy)} is occupied")
    res = grid.resolution
    g = {(sx, sy): 0.0}
    parent = {(sx, sy): None}
    heap = [(np.hypot(gx - sx, gy - sy), 0.0, sx, sy)]
    closed = set()
    while heap:
        _, gc, ix, iy = heapq.heappop(heap)
        if (ix, iy) in closed:
            continue
        closed.add((ix, iy))
        if (ix, iy) == (gx, gy):
            break
        for jx, jy, c in _neighbours(cells, ix, iy):
            ng = gc + c
            if ng < g.get((jx, jy), np.inf) - 1e-12:
                g[(jx, jy)] = ng
                parent[(jx, jy)] = (ix, iy)
                heapq.heappush(heap, (ng + np.hypot(gx - jx, gy - jy), ng, jx, jy))
    if (gx, gy) not in closed:
        raise NoPath("goal is not connected to start")
    chain = []
    node = (gx, gy)
    while node is not None:
        chain.append(node)
        node = parent[node]
    chain.reverse()
    pts = np.array([grid.center(ix, iy) for ix, iy in chain])
    return NavPath(pts, g[(gx, gy)] * res)


def free_components(grid: OccupancyGrid) -> np.ndarray:
    """Labels of connected free regions (0 = occupied).

    Without corner cutting a diagonal step needs both side cells free, so
    8-connected reachability equals 4-connected labelling.
    """
    labels, _ = ndimage.label(~grid.cells)
    return labels


def nav_reachable(grid: OccupancyGrid, labels: np.ndarray, start, goal) -> bool:
    sx, sy = grid.cell_of(start)
    gx, gy = grid.cell_of(goal)
    if not grid.inside(sx, sy) or not grid.inside(gx, gy):
        return False
    a, b = labels[sy, sx], labels[gy, gx]
    return bool(a != 0 and a == b)


# --------------------------------------------------------------- arm RRT


@dataclass(frozen=True)
class RRTParams:
    step: float = 0.1
    goal_bias: float = 0.1
    max_iters: int = 5000
    seed: int = 0
    resolution: float = 0.02  # max motion (m) of any link point between checked configurations

    def __post_init__(self):
        if self.step <= 0 or self.resolution <= 0 or not 0.0 <= self.goal_bias <= 1.0 or self.max_iters < 0:
            raise ValueError("invalid RRT parameters")

    @property
    def clearance(self) -> float:
        """Obstacle inflation that covers everything between checked samples.

        Any point of a link between two checked configurations lies within
        resolution/2 of a checked configuration's point and within half the
        link point spacing of a sampled point.
        """
        return 0.5 * (self.resolution + LINK_SPACING)


@dataclass
class ArmTrajectory:
    configs: np.ndarray  # (n, dof)
    valid: list = field(default_factory=list)  # per segment
    waypoint_index: list = field(default_factory=list)  # config index reaching each waypoint

    def __len__(self):
        return len(self.configs)

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(",".join(f"q{i + 1}" for i in range(self.configs.shape[1])) + "\n")
            for q in self.configs:
                f.write(",".join(f"{v:.6f}" for v in q) + "\n")


class Obstacles:
    """Closed oriented boxes plus any other shape offering ``contains_points``.

    Axis-aligned boxes and rotated door panels are both stored as
    (centre, rotation, half extents) and tested in compiled code.
    """

    def __init__(self, shapes=(), margin: float = 0.0):
        self.shapes = list(shapes)
        self.margin = float(margin)
        centers, rots, halfs = [], [], []
        self.others = []
        for s in shapes:
            if isinstance(s, Aabb):
                centers.append(s.center())
                rots.append(np.eye(3))
                halfs.append(s.size() / 2.0)
            elif isinstance(s, RotatedBox):
                centers.append(rotate_points(s.home.center()[None], s.pivot, s.axis, s.angle)[0])
                rots.append(rotation_matrix(s.axis, s.angle))
                halfs.append(s.home.size() / 2.0)
            else:
                self.others.append(s)
        self.centers = np.array(centers, dtype=float).reshape(-1, 3)
        self.rots = np.array(rots, dtype=float).reshape(-1, 3, 3)
        self.halfs = np.array(halfs, dtype=float).reshape(-1, 3)

    def hits(self, pts) -> np.ndarray:
        """Bool over leading axes of ``pts`` (..., P, 3): any point inside any shape."""
        pts = np.asarray(pts, dtype=float)
        lead = pts.shape[:-2]
        P = np.ascontiguousarray(pts.reshape(-1, pts.shape[-2], 3))
        hit = _points_hit(P, self.centers, self.rots, self.halfs, 1e-12 + self.margin)
        for s in self.others:
            hit |= np.asarray(s.contains_points(P.reshape(-1, 3)), dtype=bool).reshape(P.shape[:2]).any(axis=1)
        return hit.reshape(lead)

    def inflated(self, margin: float) -> "Obstacles":
        """Boxes grown by ``margin`` on every side (other shapes unchanged)."""
        return Obstacles(self.shapes, margin)


@njit(cache=True)
def _inside_any(x, y, z, centers, rots, halfs, tol):
    for b in range(centers.shape[0]):
        dx, dy, dz = x - centers[b, 0], y - centers[b, 1], z - centers[b, 2]
        R = rots[b]
        u = R[0, 0] * dx + R[1, 0] * dy + R[2, 0] * dz
        if abs(u) > halfs[b, 0] + tol:
            continue
        v = R[0, 1] * dx + R[1, 1] * dy + R[2, 1] * dz
        if abs(v) > halfs[b, 1] + tol:
            continue
        w = R[0, 2] * dx + R[1, 2] * dy + R[2, 2] * dz
        if abs(w) <= halfs[b, 2] + tol:
            return True
    return False


@njit(cache=True)
def _points_hit(P, centers, rots, halfs, tol):
    out = np.zeros(P.shape[0], dtype=np.bool_)
    for m in range(P.shape[0]):
        for k in range(P.shape[1]):
            if _inside_any(P[m, k, 0], P[m, k, 1], P[m, k, 2], centers, rots, halfs, tol):
                out[m] = True
                break
    return out


@njit(cache=True)
def _arm_hits(origins, W, c, s, bx, by, bz, centers, rots, halfs, tol):
    m = origins.shape[0]
    out = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        for k in range(W.shape[0]):
            x = y = z = 0.0
            for j in range(W.shape[1]):
                w = W[k, j]
                if w != 0.0:
                    x += w * origins[i, j, 0]
                    y += w * origins[i, j, 1]
                    z += w * origins[i, j, 2]
            if _inside_any(c * x - s * y + bx, s * x + c * y + by, z + bz, centers, rots, halfs, tol):
                out[i] = True
                break
    return out


def arm_collides(robot: RobotModel, Q, obstacles, base: BasePose | None = None, spacing: float = 0.02) -> np.ndarray:
    """Per-configuration collision flags for link point chains.

    Points are in the arm frame unless ``base`` places the arm in the world.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    obs = obstacles if isinstance(obstacles, Obstacles) else Obstacles(obstacles)
    if obs.others:
        pts = link_points(robot, Q, spacing)
        if base is not None:
            pts = arm_to_world(robot, base, pts)
        return obs.hits(pts)
    origins, _ = fk_frames(robot, Q)
    if base is None:
        c, s, bx, by, bz = 1.0, 0.0, 0.0, 0.0, 0.0
    else:
        c, s = float(np.cos(base.yaw)), float(np.sin(base.yaw))
        bx, by, bz = base.xy[0], base.xy[1], robot.mount_height
    W = _link_weights(robot, float(spacing))
    return _arm_hits(origins, W, c, s, bx, by, bz, obs.centers, obs.rots, obs.halfs, 1e-12 + obs.margin)


def _interp(qa, qb, max_step: float) -> np.ndarray:
    n = max(int(np.ceil(np.max(np.abs(qb - qa)) / max_step - 1e-12)), 1)
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return qa + t * (qb - qa)


def lever_arms(robot: RobotModel) -> np.ndarray:
    """Upper bound on the distance from joint i's axis to any point moved by it."""
    return np.cumsum(link_lengths(robot)[::-1])[::-1]


def _interp_cartesian(qa, qb, lever, resolution: float) -> np.ndarray:
    # a joint change dq moves no link point further than sum |dq_i| * lever_i
    n = max(int(np.ceil(float(np.abs(qb - qa) @ lever) / resolution - 1e-12)), 1)
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return qa + t * (qb - qa)


def densify(configs, max_step: float) -> np.ndarray:
    configs = np.asarray(configs, dtype=float)
    out = [configs[0]]
    for qa, qb in zip(configs[:-1], configs[1:]):
        out.extend(_interp(qa, qb, max_step)[1:])
    return np.array(out)


class _Tree:
    def __init__(self, root, capacity):
        self.nodes = np.empty((capacity, len(root)))
        self.parents = np.empty(capacity, dtype=np.int64)
        self.nodes[0], self.parents[0] = root, -1
        self.n = 1

    def nearest(self, q) -> tuple[int, float]:
        d = np.linalg.norm(self.nodes[: self.n] - q, axis=1)
        k = int(np.argmin(d))
        return k, float(d[k])

    def add(self, q, parent) -> int:
        self.nodes[self.n], self.parents[self.n] = q, parent
        self.n += 1
        return self.n - 1

    def branch(self, k) -> list:
        out = []
        while k >= 0:
            out.append(self.nodes[k])
            k = self.parents[k]
        return out


def arm_rrt(robot: RobotModel, q_start, q_goal, obstacles, params: RRTParams | None = None, base: BasePose | None = None) -> ArmTrajectory:
    """Bidirectional joint-space RRT with greedy connection.

    Trees grow from both ends and swap roles every iteration.  Each
    iteration extends one tree a single ``step`` toward a uniform sample (or,
    with probability ``goal_bias``, toward the other tree's root) and then
    pulls the other tree toward the new node until blocked or joined.
    Collision checks run against obstacles inflated by ``params.clearance``
    at configurations spaced so no link point moves more than
    ``params.resolution`` between them; the whole swept motion, not just the
    samples, is then free of the true obstacles.  The direct start-goal edge
    is tried before any sampling.  Consecutive configurations of the
    returned trajectory differ by at most ``step`` per joint.
    """
    p = params or RRTParams()
    obs = obstacles if isinstance(obstacles, Obstacles) else Obstacles(obstacles)
    obs = obs.inflated(p.clearance)
    lever = lever_arms(robot)
    qs = np.asarray(q_start, dtype=float)
    qg = np.asarray(q_goal, dtype=float)
    if not robot.within_limits(qs) or not robot.within_limits(qg):
        raise InvalidEndpoint("endpoint outside joint limits")
    ends = arm_collides(robot, np.stack([qs, qg]), obs, base)
    if ends.any():
        raise InvalidEndpoint("endpoint in collision")

    def edge_free(qa, qb):
        return not arm_collides(robot, _interp_cartesian(qa, qb, lever, p.resolution)[1:], obs, base).any()

    def finish(chain):
        configs = densify(chain, p.step)
        return ArmTrajectory(configs, [True] * (len(configs) - 1), [len(configs) - 1])

    if np.allclose(qs, qg, atol=1e-12, rtol=0.0):
        return ArmTrajectory(qs[None].copy(), [], [0])
    if edge_free(qs, qg):
        return finish([qs, qg])
    rng = np.random.default_rng(p.seed)
    lo, hi = robot.lower, robot.upper
    cap = 2 * p.max_iters * (1 + int(np.ceil(np.linalg.norm(hi - lo) / p.step))) + 2
    trees = [_Tree(qs, min(cap, p.max_iters + 2)), _Tree(qg, min(cap, p.max_iters + 2))]

    def grow(tree, k, target):
        """One step from node k toward target; returns the new index or None."""
        q, d = tree.nodes[k], np.linalg.norm(target - tree.nodes[k])
        qn = target if d <= p.step else q + (target - q) * (p.step / d)
        if not edge_free(q, qn):
            return None
        if tree.n == len(tree.nodes):
            tree.nodes = np.concatenate([tree.nodes, np.empty_like(tree.nodes)])
            tree.parents = np.concatenate([tree.parents, np.empty_like(tree.parents)])
        return tree.add(qn, k)

    for it in range(p.max_iters):
        a, b = trees[it % 2], trees[1 - it % 2]
        sample = b.nodes[0] if rng.random() < p.goal_bias else rng.uniform(lo, hi)
        k, d = a.nearest(sample)
        if d < 1e-12:
            continue
        new = grow(a, k, sample)
        if new is None:
            continue
        # pull the other tree toward the new node
        qn = a.nodes[new]
        kb, db = b.nearest(qn)
        while True:
            if db <= 1e-12:
                chain_a, chain_b = a.branch(new), b.branch(kb)
                chain = chain_a[::-1] + chain_b[1:]
                if a is trees[1]:
                    chain = chain[::-1]
                return finish(chain)
            nxt = grow(b, kb, qn)
            if nxt is None:
                break
            kb, db = nxt, float(np.linalg.norm(b.nodes[nxt] - qn))
    raise NoTrajectory(f"no trajectory within {p.max_iters} iterations")


def validate_trajectory(robot: RobotModel, configs, obstacles, base: BasePose | None = None, max_step: float = 0.0125) -> bool:
    """Independent re-check: in-limit and collision-free on a fine interpolation."""
    configs = np.asarray(configs, dtype=float)
    if not all(robot.within_limits(q) for q in configs):
        return False
    return not arm_collides(robot, densify(configs, max_step), obstacles, base, spacing=0.01).any()


# --------------------------------------------------- manipulation check


def body_box(robot: RobotModel, base: BasePose) -> Aabb:
    """Base plus body as a box from the floor up to the arm mount."""
    h = footprint_half_extents(robot.base_dims, base.yaw)
    xy = np.asarray(base.xy)
    return Aabb((*(xy - h), 0.0), (*(xy + h), robot.mount_height))


@dataclass
class ManipulationWorld:
    """Obstacle sets for the arm while it visits the waypoints.

    ``static`` holds every selected object except the manipulated one's
    moving panel; ``panels[j]`` is that panel at waypoint j (empty for rigid
    targets).  ``body`` holds everything the robot body must avoid.
    """

    static: list
    panels: list
    body: list

    def at(self, *js, margin: float = 0.0) -> Obstacles:
        extra = [self.panels[j] for j in js if self.panels]
        return Obstacles(self.static + extra, margin)


def manipulation_world(scene: Scene, subset, target_id: str | None, K: int, sweep_aware: bool = True) -> ManipulationWorld:
    """Obstacle sets for one manipulation.

    With ``sweep_aware`` False every object is its bounding box alone, as a
    planner blind to door motion would model it; the target's own panel
    still moves with the hand.
    """
    static, body, panels = [], [], []
    for oid in sorted(subset, key=scene.index):
        o = scene.get(oid)
        sweep = swept_obstacles(o, K) if o.articulated and sweep_aware else []
        if oid == target_id:
            if o.articulated:
                static.append(o.bbox)
                th = o.joint.angles(K)
                panels = [panel_at(o, t) for t in th]
            # a rigid target is grasped, so the arm may touch its box
            body.append(o.bbox)
            body.extend(sweep)
            continue
        static.append(o.bbox)
        static.extend(sweep)
        body.append(o.bbox)
        body.extend(sweep)
    return ManipulationWorld(static, panels, body)


def check_manipulation_feasibility(
    robot: RobotModel,
    base: BasePose,
    waypoints,
    scene: Scene,
    subset,
    target_id: str | None = None,
    seed=0,
    rrt: RRTParams | None = None,
    ik_restarts: int = IK_RESTARTS,
    sweep_aware: bool = True,
    K: int | None = None,
) -> ArmTrajectory:
    """IK at every waypoint and RRT between them, starting from home.

    Raises Infeasible with the failing waypoint index (None for a body
    collision before any waypoint is tried).
    """
    W = np.asarray(waypoints, dtype=float).reshape(-1, 3)
    if len(W) == 0:
        raise ValueError("waypoints must be nonempty")
    rrt = rrt or RRTParams()
    # other doors' sweeps need K >= 2 even when a rigid target has one waypoint
    K = K or (len(W) if len(W) >= 2 else DEFAULT_WAYPOINTS)
    world = manipulation_world(scene, subset, target_id, K, sweep_aware)
    bb = body_box(robot, base)
    for b in world.body:
        if bb.overlaps(b):
            raise Infeasible("robot body collides with the scene", index=None, reason="body")
    local = world_to_arm(robot, base, W)
    home = robot.home()
    m = rrt.clearance
    if arm_collides(robot, home, world.at(0, margin=m), base)[0]:
        raise Infeasible("home configuration collides", index=0, reason="home")
    configs = [home[None]]
    valid = []
    marks = []
    prev = home
    for j, target in enumerate(local):
        obs_j = world.at(j, margin=m)

        def free(q, obs=obs_j):
            return not arm_collides(robot, q, obs, base)[0]

        q = solve_ik(robot, target, restarts=ik_restarts, seed=[_seed_int(seed), j], q_init=prev, accept=free)
        if q is None:
            raise Infeasible(f"no collision-free IK solution for waypoint {j}", index=j, reason="ik")
        # the door moves with the hand, so a segment sees the panel where it starts
        seg_obs = world.at(j - 1) if j > 0 else world.at(j)
        params = RRTParams(rrt.step, rrt.goal_bias, rrt.max_iters, _seed_int(seed) * 1009 + j, rrt.resolution)
        try:
            seg = arm_rrt(robot, prev, q, seg_obs, params, base)
        except (NoTrajectory, InvalidEndpoint) as e:
            raise Infeasible(f"no arm trajectory to waypoint {j}: {e}", index=j, reason="rrt") from None
        configs.append(seg.configs[1:])
        valid.extend(seg.valid)
        marks.append(sum(len(c) for c in configs) - 1)
        prev = q
    return ArmTrajectory(np.concatenate(configs), valid, marks)


def _seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return int(np.random.SeedSequence(seed).generate_state(1)[0])
