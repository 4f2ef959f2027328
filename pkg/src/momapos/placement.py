"""Candidate area, line-of-sight potential field and combined placement scores.

The area holds base positions within horizontal reach of the target whose
footprint, at the yaw facing the target, clears every selected object.  Grid
lattices are anchored at the target so every resolution puts a node exactly
on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyArea, NotInArea, ResolutionTooCoarse
from .geometry import Aabb, boxes_to_arrays, rect_overlaps_rects, segments_hit_boxes
from .kinematics import RobotModel, delta_r
from .reachability import ReachabilityMap, irm_query_many
from .scene import DEFAULT_WAYPOINTS, Scene, obstacle_boxes

EPS_P = 0.05
AREA_RESOLUTION = 0.05


def footprint_half_extents(base_dims, yaw) -> np.ndarray:
    """Half extents of the AABB of the base rectangle turned by ``yaw``; shape (..., 2)."""
    c, s = np.abs(np.cos(yaw)), np.abs(np.sin(yaw))
    hl, hw = base_dims[0] / 2.0, base_dims[1] / 2.0
    return np.stack([c * hl + s * hw, s * hl + c * hw], axis=-1)


def facing_yaw(xy, target_xy) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    return np.arctan2(target_xy[1] - xy[..., 1], target_xy[0] - xy[..., 0])


def target_lattice(center, bounds: Aabb, resolution: float) -> tuple[np.ndarray, np.ndarray]:
    """Axis coordinates of the grid through ``center`` clipped to ``bounds``."""
    cx, cy = float(center[0]), float(center[1])
    i0 = int(np.ceil((bounds.min[0] - cx) / resolution - 1e-9))
    i1 = int(np.floor((bounds.max[0] - cx) / resolution + 1e-9))
    j0 = int(np.ceil((bounds.min[1] - cy) / resolution - 1e-9))
    j1 = int(np.floor((bounds.max[1] - cy) / resolution + 1e-9))
    return cx + np.arange(i0, i1 + 1) * resolution, cy + np.arange(j0, j1 + 1) * resolution


@dataclass
class CandidateArea:
    center: np.ndarray  # target point, 3D
    radius: float
    base_dims: tuple
    floor: Aabb
    rects_lo: np.ndarray
    rects_hi: np.ndarray
    scene: Scene | None = None
    subset: frozenset = frozenset()
    exclude: tuple = ()
    waypoint_count: int = DEFAULT_WAYPOINTS
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def center_xy(self) -> np.ndarray:
        return np.asarray(self.center[:2], dtype=float)

    def bounds(self) -> Aabb:
        """Bounding rectangle of the reach disc clipped to the floor."""
        c, r = self.center_xy, self.radius
        lo = np.maximum(c - r, self.floor.lo[:2])
        hi = np.minimum(c + r, self.floor.hi[:2])
        return Aabb(tuple(lo), tuple(np.maximum(hi, lo)))

    def footprints(self, xy) -> tuple[np.ndarray, np.ndarray]:
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        h = footprint_half_extents(self.base_dims, facing_yaw(xy, self.center_xy))
        return xy - h, xy + h

    def contains_many(self, xy) -> np.ndarray:
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        d = np.hypot(xy[:, 0] - self.center[0], xy[:, 1] - self.center[1])
        ok = d <= self.radius + 1e-12
        ok &= np.all((xy >= self.floor.lo[:2]) & (xy <= self.floor.hi[:2]), axis=1)
        if ok.any() and len(self.rects_lo):
            lo, hi = self.footprints(xy[ok])
            ok[ok] = ~rect_overlaps_rects(lo, hi, self.rects_lo, self.rects_hi)
        return ok

    def contains(self, xy) -> bool:
        return bool(self.contains_many(np.asarray(xy, dtype=float)[None, :2])[0])

    def grid(self, resolution: float = AREA_RESOLUTION):
        """(xs, ys, member[iy, ix]) over the bounding rectangle."""
        key = ("grid", round(resolution, 12))
        if key not in self._cache:
            xs, ys = target_lattice(self.center_xy, self.bounds(), resolution)
            X, Y = np.meshgrid(xs, ys)
            member = self.contains_many(np.stack([X.ravel(), Y.ravel()], axis=1)).reshape(X.shape)
            self._cache[key] = (xs, ys, member)
        return self._cache[key]

    def cells(self, resolution: float = AREA_RESOLUTION) -> np.ndarray:
        """Member lattice points, row-major from the lowest y."""
        xs, ys, member = self.grid(resolution)
        X, Y = np.meshgrid(xs, ys)
        return np.stack([X[member], Y[member]], axis=1)

    def occluders(self) -> tuple[np.ndarray, np.ndarray]:
        if "occ" not in self._cache:
            if self.scene is None:
                boxes = []
            else:
                boxes = obstacle_boxes(self.scene, self.subset, self.waypoint_count, exclude=self.exclude)
            self._cache["occ"] = boxes_to_arrays(boxes)
        return self._cache["occ"]


def candidate_area(
    scene: Scene,
    subset,
    robot: RobotModel,
    target,
    target_id: str | None = None,
    K: int = DEFAULT_WAYPOINTS,
    check_empty: bool = True,
) -> CandidateArea:
    """Base positions within horizontal reach that clear all objects of ``subset``.

    ``target_id`` names the object being manipulated; its own geometry still
    blocks the footprint but not the lines of sight.
    """
    target = np.asarray(target, dtype=float)
    if not scene.floor_extent.contains_point(target[:2], tol=1e-9):
        raise ValueError("target lies outside the floor")
    radius = delta_r(robot, robot.base_dims[2], target[2])
    subset = frozenset(subset)
    rects = [b.footprint() for b in obstacle_boxes(scene, subset, K)]
    lo, hi = boxes_to_arrays(rects)
    area = CandidateArea(
        target, radius, tuple(robot.base_dims), scene.floor_extent, lo[:, :2], hi[:, :2],
        scene, subset, (target_id,) if target_id else (), K,
    )
    if check_empty and not area.grid(AREA_RESOLUTION)[2].any():
        raise EmptyArea(f"no base position within {radius:.3f} m of the target clears the scene")
    return area


def line_of_sight_clear(scene: Scene, subset, p, q, exclude=(), K: int = DEFAULT_WAYPOINTS) -> bool:
    """True if segment p->q misses every box (and swept box) of ``subset``."""
    lo, hi = boxes_to_arrays(obstacle_boxes(scene, subset, K, exclude=exclude))
    if len(lo) == 0:
        return True
    return not bool(segments_hit_boxes(np.asarray(p, float)[None], np.asarray(q, float)[None], lo, hi)[0].any())


def field_value(scene: Scene, subset, candidate_xy, sample_z: float, waypoint, exclude=(), K: int = DEFAULT_WAYPOINTS) -> float:
    p = np.array([candidate_xy[0], candidate_xy[1], sample_z], dtype=float)
    if not line_of_sight_clear(scene, subset, p, waypoint, exclude, K):
        return 0.0
    d = float(np.hypot(candidate_xy[0] - waypoint[0], candidate_xy[1] - waypoint[1]))
    return 1.0 / max(d, EPS_P)


def _clear_field(xy, waypoints) -> np.ndarray:
    W = np.asarray(waypoints, dtype=float)
    d = np.hypot(xy[:, None, 0] - W[None, :, 0], xy[:, None, 1] - W[None, :, 1])
    return 1.0 / np.maximum(d, EPS_P)


def field_terms(area: CandidateArea, xy, waypoints) -> np.ndarray:
    """Per-candidate field summed over waypoints, each term zeroed when occluded.

    Lines run from (xy, waypoint height) to the waypoint.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    W = np.asarray(waypoints, dtype=float).reshape(-1, 3)
    F = _clear_field(xy, W)
    lo, hi = area.occluders()
    if len(lo) and len(xy):
        P = np.concatenate([xy[:, None, :].repeat(len(W), axis=1), np.broadcast_to(W[None, :, 2:], (len(xy), len(W), 1))], axis=-1)
        Q = np.broadcast_to(W[None], P.shape)
        blocked = segments_hit_boxes(P.reshape(-1, 3), Q.reshape(-1, 3), lo, hi).any(axis=1)
        F = np.where(blocked.reshape(F.shape), 0.0, F)
    return F.sum(axis=1)


def field_normaliser(area: CandidateArea, waypoints, resolution: float) -> float:
    """Largest occlusion-free field over the whole lattice of the area's rectangle.

    Membership and occlusion are ignored so the scale does not depend on the
    selected objects; adding an obstacle can then only lower scores.
    """
    W = np.asarray(waypoints, dtype=float).reshape(-1, 3)
    key = ("norm", round(resolution, 12), W.tobytes())
    if key not in area._cache:
        xs, ys, _ = area.grid(resolution)
        X, Y = np.meshgrid(xs, ys)
        xy = np.stack([X.ravel(), Y.ravel()], axis=1)
        area._cache[key] = float(_clear_field(xy, W).sum(axis=1).max()) if len(xy) else 1.0
    return area._cache[key]


def irm_terms(area: CandidateArea, irm: ReachabilityMap, robot: RobotModel, xy, waypoints) -> np.ndarray:
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    W = np.asarray(waypoints, dtype=float).reshape(-1, 3)
    yaw = facing_yaw(xy, area.center_xy)
    return irm_query_many(irm, xy, yaw, robot.mount_height, W).mean(axis=1)


def _check_weights(weights) -> tuple[float, float]:
    w_irm, w_f = float(weights[0]), float(weights[1])
    if w_irm < 0 or w_f < 0 or w_irm + w_f <= 0:
        raise ValueError("weights must be nonnegative with a positive sum")
    s = w_irm + w_f
    return w_irm / s, w_f / s


def combined_many(area, irm, robot, xy, waypoints, weights=(0.5, 0.5), resolution: float = AREA_RESOLUTION):
    """(combined, field_raw, irm_mean) for many member candidates."""
    w_irm, w_f = _check_weights(weights)
    f = field_terms(area, xy, waypoints)
    r = irm_terms(area, irm, robot, xy, waypoints)
    norm = field_normaliser(area, waypoints, resolution)
    fn = np.clip(f / norm, 0.0, 1.0) if norm > 0 else np.zeros_like(f)
    return w_irm * r + w_f * fn, f, r


def combined_score(area: CandidateArea, irm, robot, candidate_xy, waypoints, weights=(0.5, 0.5), resolution: float = AREA_RESOLUTION) -> float:
    if not area.contains(candidate_xy):
        raise NotInArea(f"{tuple(candidate_xy)} is not in the candidate area")
    if len(np.asarray(waypoints).reshape(-1, 3)) == 0:
        raise ValueError("waypoints must be nonempty")
    return float(combined_many(area, irm, robot, [candidate_xy[:2]], waypoints, weights, resolution)[0][0])


@dataclass
class PotentialMap:
    xs: np.ndarray
    ys: np.ndarray
    member: np.ndarray  # [iy, ix]
    field: np.ndarray
    irm: np.ndarray
    combined: np.ndarray
    weights: tuple
    resolution: float
    radius: float

    def best(self) -> np.ndarray:
        iy, ix = np.unravel_index(int(np.argmax(self.combined)), self.combined.shape)
        return np.array([self.xs[ix], self.ys[iy]])

    def header(self) -> str:
        return f"weights {self.weights[0]:g} {self.weights[1]:g} resolution {self.resolution:g} delta_r {self.radius:.6f}"

    def to_pgm(self, path) -> None:
        top = self.combined.max()
        img = np.zeros(self.combined.shape) if top <= 0 else self.combined / top
        img = np.rint(img[::-1] * 255).astype(np.uint8)
        ny, nx = img.shape
        with open(path, "wb") as f:
            f.write(f"P5\n# {self.header()} origin {self.xs[0]:.6f} {self.ys[0]:.6f}\n{nx} {ny}\n255\n".encode())
            f.write(img.tobytes())

    def to_csv(self, path) -> None:
        X, Y = np.meshgrid(self.xs, self.ys)
        with open(path, "w") as f:
            f.write(f"# {self.header()}\n")
            f.write("x,y,member,field,irm,combined\n")
            for row in zip(X.ravel(), Y.ravel(), self.member.ravel(), self.field.ravel(), self.irm.ravel(), self.combined.ravel()):
                x, y, m, fv, iv, cv = row
                f.write(f"{x:.4f},{y:.4f},{int(m)},{fv:.6f},{iv:.6f},{cv:.6f}\n")


def potential_map(area: CandidateArea, irm, robot, waypoints, resolution: float = AREA_RESOLUTION, weights=(0.5, 0.5)) -> PotentialMap:
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if resolution > area.radius:
        raise ResolutionTooCoarse(f"resolution {resolution} exceeds reach radius {area.radius:.3f}")
    xs, ys, member = area.grid(resolution)
    shape = member.shape
    fieldv = np.zeros(shape)
    irmv = np.zeros(shape)
    comb = np.zeros(shape)
    if member.any():
        X, Y = np.meshgrid(xs, ys)
        xy = np.stack([X[member], Y[member]], axis=1)
        c, f, r = combined_many(area, irm, robot, xy, waypoints, weights, resolution)
        comb[member], fieldv[member], irmv[member] = c, f, r
    return PotentialMap(xs, ys, member, fieldv, irmv, comb, _check_weights(weights), resolution, area.radius)


def manipulation_targets(scene: Scene, target_id: str, K: int = DEFAULT_WAYPOINTS) -> tuple[np.ndarray, np.ndarray]:
    """(target point, waypoints) for an object.

    Articulated objects use K handle positions along the opening arc and
    their centroid as the target point; rigid objects use their grasp point.
    """
    from .scene import handle_waypoints

    obj = scene.get(target_id)
    if obj.articulated:
        W = handle_waypoints(obj, K)
        return W.mean(axis=0), W
    p = np.asarray(obj.position, dtype=float)
    return p, p[None, :]
