"""Baseline placement strategies that model every object as a plain box.

None of them knows about door sweeps: footprints are checked against
bounding boxes only and the manipulation check they run themselves is
sweep blind.  The shared verifier then judges their answers like any other.

* habitat: nearest navigable cell for rigid targets, a fixed frontal
  standoff for articulated ones.
* m3star: random cells of the reach disc until one passes (fixed base, no
  learned policy).
* reuleaux: cells with nonzero inverse-reachability score, best first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, UnknownTarget
from .geometry import Aabb
from .kinematics import BasePose, RobotModel, delta_r
from .motion import IK_RESTARTS, RRTParams, body_box, check_manipulation_feasibility, free_components
from .placement import facing_yaw, manipulation_targets, target_lattice
from .reachability import ReachabilityMap, irm_query_many
from .scene import DEFAULT_WAYPOINTS, Scene
from .search import _mm, aligned_occupancy

STRATEGIES = ("momapos", "habitat", "m3star", "reuleaux")
CELL = 0.05


@dataclass(frozen=True)
class BaselineParams:
    standoff: float = 0.6
    budget: int = 50
    cell: float = CELL
    waypoints: int = DEFAULT_WAYPOINTS
    ik_restarts: int = IK_RESTARTS
    rrt_max_iters: int = 5000

    def __post_init__(self):
        if self.standoff <= 0 or self.budget < 1 or self.cell <= 0:
            raise ValueError("standoff > 0, budget >= 1 and cell > 0 required")


class _StaticWorld:
    """What a sweep-blind planner knows: boxes, a disc-robot grid, the start."""

    def __init__(self, scene: Scene, robot: RobotModel, target_id: str, params: BaselineParams):
        if target_id not in scene:
            raise UnknownTarget(f"no object {target_id!r} in scene")
        self.scene, self.robot, self.target_id, self.params = scene, robot, target_id, params
        self.obj = scene.get(target_id)
        self.target_point, self.waypoints = manipulation_targets(scene, target_id, params.waypoints)
        self.boxes = [o.bbox for o in scene.objects]
        radius = min(robot.base_dims[0], robot.base_dims[1]) / 2.0
        self.grid = aligned_occupancy(scene, scene.ids, params.cell, radius, self.target_point, params.waypoints, sweep=False)
        self.labels = free_components(self.grid)
        sx, sy = self.grid.cell_of(scene.start_xy())
        self.start_label = self.labels[sy, sx] if self.grid.inside(sx, sy) else 0

    def pose(self, xy) -> BasePose:
        return BasePose.facing(np.asarray(xy, dtype=float), self.target_point[:2])

    def navigable(self, xy) -> bool:
        ix, iy = self.grid.cell_of(xy)
        return bool(self.grid.inside(ix, iy) and self.start_label != 0 and self.labels[iy, ix] == self.start_label)

    def static_free(self, pose: BasePose) -> bool:
        if not self.scene.floor_extent.contains_point(pose.xy, tol=1e-9):
            return False
        bb = body_box(self.robot, pose)
        return not any(bb.overlaps(b) for b in self.boxes)

    def manipulable(self, pose: BasePose, seed: int) -> bool:
        p = self.params
        try:
            check_manipulation_feasibility(
                self.robot, pose, self.waypoints, self.scene, self.scene.ids, self.target_id,
                seed=[seed, *_mm(pose.xy)], rrt=RRTParams(max_iters=p.rrt_max_iters, seed=seed),
                ik_restarts=p.ik_restarts, sweep_aware=False,
            )
        except Infeasible:
            return False
        return True

    def disc_cells(self) -> np.ndarray:
        """Lattice cells (through the target point) within horizontal reach."""
        r = delta_r(self.robot, self.robot.base_dims[2], self.target_point[2])
        fl = self.scene.floor_extent
        c = self.target_point[:2]
        bounds = Aabb(tuple(np.maximum(c - r, fl.lo[:2])), tuple(np.minimum(c + r, fl.hi[:2])))
        xs, ys = target_lattice(c, bounds, self.params.cell)
        X, Y = np.meshgrid(xs, ys)
        xy = np.stack([X.ravel(), Y.ravel()], axis=1)
        return xy[np.hypot(*(xy - c).T) <= r + 1e-12]

    def nearest_free(self) -> BasePose:
        """Navigable, statically free grid cell closest to the target."""
        X, Y = self.grid.centers()
        xy = np.stack([X.ravel(), Y.ravel()], axis=1)
        d = np.hypot(*(xy - self.target_point[:2]).T)
        for k in np.lexsort((np.arange(len(d)), d)):
            if not self.navigable(xy[k]):
                continue
            pose = self.pose(xy[k])
            if self.static_free(pose):
                return pose
        raise Infeasible("no navigable free cell", reason="no_free_cell")


def front_normal(obj) -> np.ndarray:
    """Outward unit normal (xy) of the box face the handle sits in front of."""
    h = np.asarray(obj.joint.handle_home[:2])
    lo, hi = obj.bbox.lo[:2], obj.bbox.hi[:2]
    gaps = np.array([lo[0] - h[0], h[0] - hi[0], lo[1] - h[1], h[1] - hi[1]])
    normals = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
    return normals[int(np.argmax(gaps))]


def habitat_placement(scene: Scene, robot: RobotModel, target_id: str, params: BaselineParams | None = None) -> BasePose:
    params = params or BaselineParams()
    world = _StaticWorld(scene, robot, target_id, params)
    obj = world.obj
    if not obj.articulated:
        return world.nearest_free()
    n = front_normal(obj)
    c = obj.bbox.center()[:2]
    half = obj.bbox.size()[:2] / 2.0
    face = c + n * float(np.abs(n) @ half)
    xy = face + params.standoff * n
    pose = BasePose(xy, float(np.arctan2(-n[1], -n[0])))
    if not world.static_free(pose):
        raise Infeasible("frontal standoff cell is occupied", reason="occupied")
    return pose


def m3star_placement(scene: Scene, robot: RobotModel, target_id: str, seed: int = 0,
                     params: BaselineParams | None = None, trace: list | None = None) -> BasePose:
    params = params or BaselineParams()
    world = _StaticWorld(scene, robot, target_id, params)
    if not world.obj.articulated:
        return world.nearest_free()
    cells = world.disc_cells()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 3]))
    return _descend(world, cells, rng.permutation(len(cells)), None, int(seed), trace)


def reuleaux_placement(scene: Scene, robot: RobotModel, target_id: str, irm: ReachabilityMap, seed: int = 0,
                       params: BaselineParams | None = None, trace: list | None = None) -> BasePose:
    params = params or BaselineParams()
    world = _StaticWorld(scene, robot, target_id, params)
    cells = world.disc_cells()
    tp = world.target_point
    scores = irm_query_many(irm, cells, facing_yaw(cells, tp[:2]), robot.mount_height, tp[None])[:, 0]
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 5]))
    order = np.lexsort((rng.random(len(cells)), -scores))
    # a zero score means the map never saw the target from there
    order = order[scores[order] > 0]
    return _descend(world, cells, order, scores, int(seed), trace)


def _descend(world: _StaticWorld, cells, order, scores, seed: int, trace) -> BasePose:
    """Walk ``order``; cells that are free and navigable spend one unit of budget
    on a manipulation check, the first that passes wins."""
    spent = 0
    for k in order:
        if spent >= world.params.budget:
            break
        xy = cells[k]
        pose = world.pose(xy)
        if not (world.static_free(pose) and world.navigable(xy)):
            continue
        spent += 1
        if trace is not None:
            trace.append((float(xy[0]), float(xy[1])) + (() if scores is None else (float(scores[k]),)))
        if world.manipulable(pose, seed):
            return pose
    raise Infeasible(f"no placement after {spent} manipulation checks", reason="budget")
