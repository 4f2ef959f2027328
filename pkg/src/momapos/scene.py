"""Scene model: rigid and articulated objects, relations, and derived geometry.

Scene files are JSON documents::

    {
      "name": "kitchen",                      # optional
      "floor": {"min": [x, y], "max": [x, y]},
      "start": [x, y],                        # optional robot start position
      "objects": [
        {"id": "apple", "kind": "rigid",
         "bbox": {"min": [x, y, z], "max": [x, y, z]},
         "position": [x, y, z]},              # optional, defaults to bbox centroid
        {"id": "fridge", "kind": "articulated",
         "bbox": {...},
         "joint": {"pivot": [x, y, z], "axis": [0, 0, 1],
                   "handle_home": [x, y, z],
                   "panel_home": {"min": [...], "max": [...]},
                   "angle_range": [0, 1.5708],
                   "hinge_side": "left"}}
      ],
      "relations": [{"parent": "table", "child": "apple", "relation": "on"}]
    }

Units are meters and radians, z up.  A left-hinged panel rotates by +theta
about its axis (right-hand rule), a right-hinged one by -theta.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NotArticulated, ParseError, ResolutionTooCoarse, ValidationError
from .geometry import Aabb, RotatedBox, arc_aabb, rotate_points

RELATIONS = ("on", "in", "inside")
DEFAULT_WAYPOINTS = 10


@dataclass(frozen=True)
class JointSpec:
    pivot: tuple
    axis: tuple
    handle_home: tuple
    panel_home: Aabb
    angle_range: tuple = (0.0, np.pi / 2)
    hinge_side: str = "left"

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(axis)
        if not np.isfinite(n) or abs(n - 1.0) > 1e-6:
            raise ValidationError(f"joint axis must be a unit vector, got norm {n}")
        object.__setattr__(self, "axis", tuple(axis / n))
        object.__setattr__(self, "pivot", tuple(float(v) for v in self.pivot))
        object.__setattr__(self, "handle_home", tuple(float(v) for v in self.handle_home))
        lo, hi = (float(v) for v in self.angle_range)
        object.__setattr__(self, "angle_range", (lo, hi))
        if lo != 0.0:
            raise ValidationError("angle_range must start at 0")
        if not 0.0 <= hi <= np.pi:
            raise ValidationError("angle_range upper bound must lie in [0, pi]")
        if self.hinge_side not in ("left", "right"):
            raise ValidationError(f"hinge_side must be left or right, got {self.hinge_side!r}")
        if not self.panel_home.is_valid():
            raise ValidationError("panel_home box is inverted")
        if np.count_nonzero(self.panel_home.size() > 0) < 2:
            raise ValidationError("panel_home is degenerate (no face with positive area)")
        if self.panel_home.contains_point(self.handle_home):
            raise ValidationError("handle_home lies inside the door panel")

    @property
    def sign(self) -> float:
        return 1.0 if self.hinge_side == "left" else -1.0

    def angles(self, K: int) -> np.ndarray:
        lo, hi = self.angle_range
        return lo + np.arange(K) * (hi - lo) / (K - 1)

    def to_dict(self) -> dict:
        return {
            "pivot": list(self.pivot),
            "axis": list(self.axis),
            "handle_home": list(self.handle_home),
            "panel_home": self.panel_home.to_dict(),
            "angle_range": list(self.angle_range),
            "hinge_side": self.hinge_side,
        }


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    position: tuple
    bbox: Aabb
    kind: str = "rigid"
    joint: JointSpec | None = None

    @property
    def articulated(self) -> bool:
        return self.kind == "articulated"

    def to_dict(self) -> dict:
        d = {"id": self.id, "kind": self.kind, "bbox": self.bbox.to_dict(), "position": list(self.position)}
        if self.joint is not None:
            d["joint"] = self.joint.to_dict()
        return d


@dataclass(frozen=True)
class SpatialRelation:
    parent_id: str
    child_id: str
    relation: str = "on"

    def to_dict(self) -> dict:
        return {"parent": self.parent_id, "child": self.child_id, "relation": self.relation}


@dataclass(frozen=True)
class Scene:
    objects: tuple
    relations: tuple
    floor_extent: Aabb
    start: tuple | None = None
    name: str = "scene"
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "relations", tuple(self.relations))
        if self.start is not None:
            object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        validate_scene(self)
        object.__setattr__(self, "_index", {o.id: i for i, o in enumerate(self.objects)})

    def __len__(self):
        return len(self.objects)

    @property
    def ids(self) -> list[str]:
        return [o.id for o in self.objects]

    def index(self, oid: str) -> int:
        return self._index[oid]

    def get(self, oid: str) -> ObjectInstance:
        try:
            return self.objects[self._index[oid]]
        except KeyError:
            raise KeyError(f"no object {oid!r} in scene") from None

    def __contains__(self, oid) -> bool:
        return oid in self._index

    def start_xy(self) -> np.ndarray:
        if self.start is not None:
            return np.array(self.start[:2])
        lo = np.array(self.floor_extent.min[:2])
        return lo + 0.5

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "floor": self.floor_extent.to_dict(),
            "objects": [o.to_dict() for o in self.objects],
            "relations": [r.to_dict() for r in self.relations],
        }
        if self.start is not None:
            d["start"] = list(self.start)
        return d


def validate_scene(scene: Scene) -> None:
    seen = set()
    for o in scene.objects:
        if o.id in seen:
            raise ValidationError(f"duplicate object id {o.id!r}")
        seen.add(o.id)
        if not o.bbox.is_valid() or o.bbox.dim != 3:
            raise ValidationError(f"object {o.id!r} has an inverted or non-3D box")
        if np.max(np.abs(np.asarray(o.position) - o.bbox.center())) > 1e-6:
            raise ValidationError(f"object {o.id!r} position is not its box centroid")
        if o.kind not in ("rigid", "articulated"):
            raise ValidationError(f"object {o.id!r} has unknown kind {o.kind!r}")
        if o.articulated and o.joint is None:
            raise ValidationError(f"articulated object {o.id!r} has no joint")
        if not o.articulated and o.joint is not None:
            raise ValidationError(f"rigid object {o.id!r} carries a joint")
        fp = o.bbox.footprint()
        fl = scene.floor_extent
        if not (fl.contains_point(fp.min, tol=1e-9) and fl.contains_point(fp.max, tol=1e-9)):
            raise ValidationError(f"object {o.id!r} footprint leaves the floor extent")
    children = {}
    for r in scene.relations:
        if r.parent_id not in seen or r.child_id not in seen:
            raise ValidationError(f"relation {r.parent_id}->{r.child_id} references an unknown id")
        if r.parent_id == r.child_id:
            raise ValidationError(f"self relation on {r.parent_id!r}")
        if r.relation not in RELATIONS:
            raise ValidationError(f"unknown relation {r.relation!r}")
        children.setdefault(r.parent_id, []).append(r.child_id)
    # cycle check (iterative DFS with colours)
    state = {}
    for root in children:
        stack = [(root, iter(children.get(root, ())))]
        if state.get(root) == 2:
            continue
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state.get(nxt) == 1:
                raise ValidationError("relation graph contains a cycle")
            elif state.get(nxt) is None:
                state[nxt] = 1
                stack.append((nxt, iter(children.get(nxt, ()))))


def _box(d, what) -> Aabb:
    try:
        return Aabb(tuple(d["min"]), tuple(d["max"]))
    except (KeyError, TypeError) as e:
        raise ParseError(f"malformed box in {what}: {e}") from None


def scene_from_dict(data: dict) -> Scene:
    if not isinstance(data, dict):
        raise ParseError("scene document must be an object")
    try:
        floor = _box(data["floor"], "floor")
        raw_objects = data["objects"]
        raw_rel = data.get("relations", [])
    except KeyError as e:
        raise ParseError(f"missing key {e}") from None
    if floor.dim != 2:
        floor = floor.footprint()
    objects = []
    for raw in raw_objects:
        try:
            oid = str(raw["id"])
            bbox = _box(raw["bbox"], oid)
            kind = raw.get("kind", "rigid")
            joint = None
            if raw.get("joint") is not None:
                j = raw["joint"]
                joint = JointSpec(
                    pivot=tuple(j["pivot"]),
                    axis=tuple(j.get("axis", (0.0, 0.0, 1.0))),
                    handle_home=tuple(j["handle_home"]),
                    panel_home=_box(j["panel_home"], oid + ".panel_home"),
                    angle_range=tuple(j.get("angle_range", (0.0, np.pi / 2))),
                    hinge_side=j.get("hinge_side", "left"),
                )
        except (KeyError, TypeError) as e:
            raise ParseError(f"malformed object entry: {e}") from None
        pos = raw.get("position")
        if pos is None:
            pos = tuple(bbox.center()) if bbox.is_valid() else bbox.min
        objects.append(ObjectInstance(oid, tuple(float(v) for v in pos), bbox, kind, joint))
    relations = []
    for r in raw_rel:
        try:
            relations.append(SpatialRelation(str(r["parent"]), str(r["child"]), r.get("relation", "on")))
        except (KeyError, TypeError) as e:
            raise ParseError(f"malformed relation: {e}") from None
    return Scene(objects, relations, floor, start=data.get("start"), name=data.get("name", "scene"))


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e}") from None
    return scene_from_dict(data)


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene.to_dict(), indent=2)


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(dumps_scene(scene) + "\n", encoding="utf-8")


def dist_xy(a, b) -> float:
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def _joint(obj: ObjectInstance) -> JointSpec:
    if not obj.articulated or obj.joint is None:
        raise NotArticulated(f"object {obj.id!r} is not articulated")
    return obj.joint


def handle_waypoints(obj: ObjectInstance, K: int = DEFAULT_WAYPOINTS) -> np.ndarray:
    """Handle positions at K evenly spaced opening angles, shape (K, 3)."""
    j = _joint(obj)
    if K < 2:
        raise ValueError("K must be at least 2")
    out = [rotate_points(np.array([j.handle_home]), j.pivot, j.axis, j.sign * t)[0] for t in j.angles(K)]
    out[0] = np.array(j.handle_home)
    return np.array(out)


def panel_at(obj: ObjectInstance, angle: float):
    """The door panel as a rotated box at opening angle ``angle``."""
    j = _joint(obj)
    return RotatedBox(j.panel_home, j.pivot, j.axis, j.sign * angle)


def swept_obstacles(obj: ObjectInstance, K: int = DEFAULT_WAYPOINTS) -> list[Aabb]:
    """K boxes covering the opening sweep of the panel.

    Box 0 is the panel at its first angle; box j > 0 encloses the panel over
    [theta_{j-1}, theta_j], so each box holds the panel at theta_j and the
    union covers every intermediate angle.
    """
    j = _joint(obj)
    if K < 2:
        raise ValueError("K must be at least 2")
    corners = j.panel_home.corners()
    th = j.angles(K) * j.sign
    boxes = [arc_aabb(corners, j.pivot, j.axis, th[0], th[0])]
    for k in range(1, K):
        boxes.append(arc_aabb(corners, j.pivot, j.axis, th[k - 1], th[k]))
    if th[0] == 0.0:
        boxes[0] = j.panel_home
    return boxes


def obstacle_boxes(scene: Scene, subset, K: int = DEFAULT_WAYPOINTS, sweep: bool = True, exclude=()) -> list[Aabb]:
    """Bounding boxes (plus swept panel boxes for articulated objects) of ``subset``."""
    out = []
    for oid in sorted(subset, key=scene.index):
        if oid in exclude:
            continue
        o = scene.get(oid)
        out.append(o.bbox)
        if sweep and o.articulated:
            out.extend(swept_obstacles(o, K))
    return out


@dataclass
class OccupancyGrid:
    """Boolean occupancy over the floor; ``cells[iy, ix]`` is True when occupied."""

    resolution: float
    origin: tuple
    cells: np.ndarray

    @property
    def shape(self):
        return self.cells.shape

    def cell_of(self, xy) -> tuple[int, int]:
        ix = int(np.floor((xy[0] - self.origin[0]) / self.resolution))
        iy = int(np.floor((xy[1] - self.origin[1]) / self.resolution))
        return ix, iy

    def inside(self, ix: int, iy: int) -> bool:
        ny, nx = self.cells.shape
        return 0 <= ix < nx and 0 <= iy < ny

    def center(self, ix, iy) -> np.ndarray:
        return np.array([self.origin[0] + (ix + 0.5) * self.resolution, self.origin[1] + (iy + 0.5) * self.resolution])

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        ny, nx = self.cells.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)

    def occupied_at(self, xy) -> bool:
        ix, iy = self.cell_of(xy)
        if not self.inside(ix, iy):
            return True
        return bool(self.cells[iy, ix])

    def to_pgm(self, path) -> None:
        # top row of the image is the largest y
        img = np.where(self.cells[::-1], 0, 255).astype(np.uint8)
        ny, nx = img.shape
        with open(path, "wb") as f:
            f.write(f"P5\n# resolution {self.resolution} origin {self.origin[0]} {self.origin[1]}\n{nx} {ny}\n255\n".encode())
            f.write(img.tobytes())

    def to_csv(self, path) -> None:
        X, Y = self.centers()
        with open(path, "w") as f:
            f.write("x,y,occupied\n")
            for x, y, c in zip(X.ravel(), Y.ravel(), self.cells.ravel()):
                f.write(f"{x:.4f},{y:.4f},{int(c)}\n")


def footprint_radius(robot_footprint) -> float:
    size = robot_footprint.size() if isinstance(robot_footprint, Aabb) else np.asarray(robot_footprint, dtype=float)
    return 0.5 * float(np.hypot(size[0], size[1]))


def disc_hits_rects(px, py, radius, rects) -> np.ndarray:
    """True where a disc at (px, py) touches any of the 2D rectangles."""
    occ = np.zeros(np.shape(px), dtype=bool)
    for r in rects:
        dx = np.maximum(np.maximum(r.min[0] - px, 0.0), px - r.max[0])
        dy = np.maximum(np.maximum(r.min[1] - py, 0.0), py - r.max[1])
        occ |= dx * dx + dy * dy <= radius * radius
    return occ


def build_occupancy(scene: Scene, subset, resolution: float, robot_footprint, K: int = DEFAULT_WAYPOINTS) -> OccupancyGrid:
    """Occupancy of base-centre positions for a disc robot of half-diagonal radius."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    fl = scene.floor_extent
    w, h = fl.max[0] - fl.min[0], fl.max[1] - fl.min[1]
    nx = int(np.ceil(w / resolution - 1e-9))
    ny = int(np.ceil(h / resolution - 1e-9))
    if nx < 2 or ny < 2:
        raise ResolutionTooCoarse(f"grid {nx}x{ny} is smaller than 2x2")
    grid = OccupancyGrid(resolution, (fl.min[0], fl.min[1]), np.zeros((ny, nx), dtype=bool))
    X, Y = grid.centers()
    rects = [b.footprint() for b in obstacle_boxes(scene, subset, K)]
    grid.cells = disc_hits_rects(X, Y, footprint_radius(robot_footprint), rects)
    return grid
