"""Candidate sampling, open-TSP ordering and the annealed planning loop.

``plan`` lowers the importance threshold whenever every sampled candidate
fails, so the modelled object set only grows.  The last level always models
every object.  A candidate is accepted when it passes the check against the
modelled set and then the check against the full scene, which stands in for
executing the placement in the real room.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateCorpus, EmptyArea, Infeasible, UnknownTarget
from .importance import EmbedParams, WalkParams, predict_importance
from .kinematics import BasePose, RobotModel
from .motion import IK_RESTARTS, ArmTrajectory, NavPath, RRTParams, check_manipulation_feasibility, free_components, nav_path
from .placement import AREA_RESOLUTION, CandidateArea, candidate_area, combined_many, manipulation_targets, potential_map
from .reachability import ReachabilityMap
from .scene import DEFAULT_WAYPOINTS, OccupancyGrid, Scene, disc_hits_rects, obstacle_boxes

STAGES = ("importance", "modeling", "potential_field", "sampling_tsp", "feasibility")
LHS_ATTEMPTS = 20
EXACT_TSP_MAX = 12


@dataclass(frozen=True)
class PlannerConfig:
    M: int = 100
    T: int = 8
    k1: float = 1.0
    k1p: float = -1.0
    alpha_init: float = 0.45
    alpha_decay: float = 0.9
    alpha_min: float = 0.05
    weights: tuple = (0.5, 0.5)
    resolution: float = AREA_RESOLUTION
    seed: int = 0
    candidates: str = "lhs"  # "lhs" or "grid" (every area cell)
    waypoints: int = DEFAULT_WAYPOINTS
    ik_restarts: int = IK_RESTARTS
    rrt_step: float = 0.1
    rrt_goal_bias: float = 0.1
    rrt_max_iters: int = 5000

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.M < 1 or self.T < 2:
            raise ValueError("M >= 1 and T >= 2 required")
        if self.k1 < 0:
            raise ValueError("k1 must be nonnegative")
        if not 0.0 < self.alpha_min <= self.alpha_init <= 1.0:
            raise ValueError("need 0 < alpha_min <= alpha_init <= 1")
        if not 0.0 < self.alpha_decay < 1.0:
            raise ValueError("alpha_decay must lie in (0, 1)")
        if self.candidates not in ("lhs", "grid"):
            raise ValueError("candidates must be 'lhs' or 'grid'")
        if self.resolution <= 0 or self.waypoints < 2:
            raise ValueError("resolution > 0 and waypoints >= 2 required")

    def rrt(self) -> RRTParams:
        return RRTParams(self.rrt_step, self.rrt_goal_bias, self.rrt_max_iters, self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = list(self.weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)


# ------------------------------------------------------------- sampling


def lhs_sample(area: CandidateArea, M: int, seed=0) -> np.ndarray:
    """Latin hypercube over the area's bounding rectangle, members only.

    Each of the M (x stratum, y stratum) cells gets one uniform draw; draws
    outside the area are redrawn in the same cell up to 20 times, then the
    cell is dropped.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    b = area.bounds()
    lo, hi = np.asarray(b.min[:2]), np.asarray(b.max[:2])
    rng = np.random.default_rng(np.random.SeedSequence(_entropy(seed)))
    perm = rng.permutation(M)
    strata = np.stack([np.arange(M), perm], axis=1)
    U = rng.random((LHS_ATTEMPTS, M, 2))
    pts = lo + (strata[None] + U) / M * (hi - lo)
    out = np.full((M, 2), np.nan)
    todo = np.ones(M, dtype=bool)
    for a in range(LHS_ATTEMPTS):
        if not todo.any():
            break
        idx = np.flatnonzero(todo)
        ok = area.contains_many(pts[a, idx])
        out[idx[ok]] = pts[a, idx[ok]]
        todo[idx[ok]] = False
    if not np.isfinite(out).all(axis=1).any() and not area.grid()[2].any():
        raise EmptyArea("candidate area has no members")
    return out[~todo]


def group_candidates(candidates, scores, T: int) -> list[np.ndarray]:
    """Index groups of size T in descending score order (ties by index)."""
    if T < 2:
        raise ValueError("T must be >= 2")
    scores = np.asarray(scores, dtype=float)
    order = np.lexsort((np.arange(len(scores)), -scores))
    return [order[i : i + T] for i in range(0, len(order), T)]


# ------------------------------------------------------------ open TSP


def tsp_costs(points, F, start, k1: float, k1p: float, start_score: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """(c0, C): start->j costs and j->k costs, weight k1*dist + k1p*(F_to - F_from)."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    F = np.asarray(F, dtype=float)
    s = np.asarray(start, dtype=float)
    c0 = k1 * np.hypot(*(P - s).T) + k1p * (F - start_score)
    D = np.hypot(P[:, None, 0] - P[None, :, 0], P[:, None, 1] - P[None, :, 1])
    C = k1 * D + k1p * (F[None, :] - F[:, None])
    return c0, C


def path_cost(order, c0, C) -> float:
    order = list(order)
    if not order:
        return 0.0
    return float(c0[order[0]] + sum(C[a, b] for a, b in zip(order[:-1], order[1:])))


def _greedy_order(c0, C) -> list[int]:
    n = len(c0)
    left = list(range(n))
    cur = min(left, key=lambda j: (c0[j], j))
    order = [cur]
    left.remove(cur)
    while left:
        cur = min(left, key=lambda j: (C[cur, j], j))
        order.append(cur)
        left.remove(cur)
    return order


def _branch_and_bound(c0, C) -> list[int]:
    n = len(c0)
    # cheapest way into each node from anywhere, a valid bound even for negative weights
    into = np.minimum(c0, np.where(np.eye(n, dtype=bool), np.inf, C).min(axis=0))
    best = [path_cost(_greedy_order(c0, C), c0, C) + 1e-9, None]
    order = []
    used = [False] * n

    def rec(cost, last, rem_bound):
        if len(order) == n:
            if best[1] is None or cost < best[0] - 1e-12:
                best[0], best[1] = cost, list(order)
            return
        if cost + rem_bound >= best[0] - 1e-12 and best[1] is not None:
            return
        if cost + rem_bound > best[0]:
            return
        for j in range(n):
            if used[j]:
                continue
            step = c0[j] if last < 0 else C[last, j]
            used[j] = True
            order.append(j)
            rec(cost + step, j, rem_bound - into[j])
            order.pop()
            used[j] = False

    rec(0.0, -1, float(into.sum()))
    return best[1] if best[1] is not None else _greedy_order(c0, C)


def open_tsp_order(points, F, start, k1: float = 1.0, k1p: float = -1.0) -> list[int]:
    """Visiting order of a minimum-weight open path from ``start``.

    Exact depth-first branch and bound up to 12 candidates, nearest
    neighbour beyond.  Children are expanded in index order and only strict
    improvements replace the incumbent, so ties go to the lexicographically
    first order.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(P)
    if n == 0:
        raise ValueError("need at least one candidate")
    if n == 1:
        return [0]
    c0, C = tsp_costs(P, F, start, k1, k1p)
    if n <= EXACT_TSP_MAX:
        return _branch_and_bound(c0, C)
    return _greedy_order(c0, C)


# ---------------------------------------------------------- verification


def aligned_occupancy(scene: Scene, subset, resolution: float, radius: float, anchor, K: int = DEFAULT_WAYPOINTS,
                      sweep: bool = True) -> OccupancyGrid:
    """Disc-robot occupancy on a grid whose cell centres pass through ``anchor``.

    Cells whose centre falls off the floor count as occupied.
    """
    fl = scene.floor_extent
    ax, ay = float(anchor[0]), float(anchor[1])
    ox = ax - resolution / 2 - np.ceil((ax - resolution / 2 - fl.min[0]) / resolution - 1e-9) * resolution
    oy = ay - resolution / 2 - np.ceil((ay - resolution / 2 - fl.min[1]) / resolution - 1e-9) * resolution
    nx = max(int(np.ceil((fl.max[0] - ox) / resolution - 1e-9)), 2)
    ny = max(int(np.ceil((fl.max[1] - oy) / resolution - 1e-9)), 2)
    grid = OccupancyGrid(resolution, (float(ox), float(oy)), np.zeros((ny, nx), dtype=bool))
    X, Y = grid.centers()
    off = (X < fl.min[0]) | (X > fl.max[0]) | (Y < fl.min[1]) | (Y > fl.max[1])
    rects = [b.footprint() for b in obstacle_boxes(scene, subset, K, sweep=sweep)]
    grid.cells = off | disc_hits_rects(X, Y, radius, rects)
    return grid


@dataclass
class Verdict:
    ok: bool
    reason: str  # ok, floor, body, nav, home, ik, rrt
    index: int | None = None
    trajectory: ArmTrajectory | None = None


class Verifier:
    """Feasibility of a base position against one object set, memoised per position.

    Navigation treats the robot as a disc of its inscribed radius on a grid
    aligned with the target lattice.  Manipulation seeds derive from the
    master seed and the position in millimetres, so a position gets the same
    verdict whichever strategy or annealing level proposes it.
    """

    def __init__(self, scene: Scene, robot: RobotModel, target_id: str, subset=None, seed: int = 0,
                 K: int = DEFAULT_WAYPOINTS, resolution: float = AREA_RESOLUTION, rrt: RRTParams | None = None,
                 ik_restarts: int = IK_RESTARTS):
        if target_id not in scene:
            raise UnknownTarget(f"no object {target_id!r} in scene")
        self.scene, self.robot, self.target_id = scene, robot, target_id
        self.subset = frozenset(scene.ids if subset is None else subset) | {target_id}
        self.seed, self.K, self.rrt, self.ik_restarts = int(seed), K, rrt or RRTParams(), ik_restarts
        self.target_point, self.waypoints = manipulation_targets(scene, target_id, K)
        self.radius = min(robot.base_dims[0], robot.base_dims[1]) / 2.0
        self.grid = aligned_occupancy(scene, self.subset, resolution, self.radius, self.target_point, K)
        self.labels = free_components(self.grid)
        self.start = scene.start_xy()
        self._memo = {}

    def pose(self, xy) -> BasePose:
        return BasePose.facing(np.asarray(xy, dtype=float), self.target_point[:2])

    def reachable(self, xy) -> bool:
        g = self.grid
        sx, sy = g.cell_of(self.start)
        gx, gy = g.cell_of(xy)
        if not (g.inside(sx, sy) and g.inside(gx, gy)):
            return False
        a = self.labels[sy, sx]
        return bool(a != 0 and a == self.labels[gy, gx])

    def check(self, xy, yaw: float | None = None) -> Verdict:
        xy = np.asarray(xy, dtype=float)[:2]
        base = self.pose(xy) if yaw is None else BasePose(xy, yaw)
        key = (round(base.xy[0], 6), round(base.xy[1], 6), round(base.yaw, 9))
        if key not in self._memo:
            self._memo[key] = self._check(base)
        return self._memo[key]

    def _check(self, base: BasePose) -> Verdict:
        if not self.scene.floor_extent.contains_point(base.xy, tol=1e-9):
            return Verdict(False, "floor")
        if not self.reachable(base.xy):
            return Verdict(False, "nav")
        seed = [self.seed, *_mm(base.xy)]
        try:
            traj = check_manipulation_feasibility(
                self.robot, base, self.waypoints, self.scene, self.subset, self.target_id,
                seed=seed, rrt=self.rrt, ik_restarts=self.ik_restarts,
            )
        except Infeasible as e:
            return Verdict(False, e.reason or "infeasible", e.index)
        return Verdict(True, "ok", None, traj)

    def path(self, xy) -> NavPath:
        return nav_path(self.grid, self.start, xy)


def _mm(xy) -> list[int]:
    # SeedSequence wants nonnegative entropy
    return [int(round(v * 1000.0)) + 2**31 for v in xy]


def _entropy(seed) -> list[int]:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


# ----------------------------------------------------------------- plan


@dataclass
class LevelRecord:
    alpha: float
    subset: list
    candidates: int
    tried: int
    winner: int | None = None


@dataclass
class PlanResult:
    target: str
    base_pose: BasePose
    nav_path: NavPath
    arm_trajectory: ArmTrajectory
    score: float
    candidates_tried: int
    alpha_final: float
    levels: list
    timing: dict = field(default_factory=dict)

    @property
    def alpha_history(self) -> list:
        return [lv.alpha for lv in self.levels]

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "target": self.target,
            "base_pose": self.base_pose.to_dict(),
            "score": self.score,
            "nav_path": {"length": self.nav_path.length, "points": self.nav_path.points.tolist()},
            "arm_trajectory": {
                "waypoint_index": list(self.arm_trajectory.waypoint_index),
                "configs": self.arm_trajectory.configs.tolist(),
            },
            "candidates_tried": self.candidates_tried,
            "alpha_final": self.alpha_final,
            "alpha_history": self.alpha_history,
            "levels": [asdict(lv) for lv in self.levels],
        }
        if timing:
            total = sum(self.timing.values())
            d["timing_ms"] = {k: 1000.0 * v for k, v in self.timing.items()}
            d["timing_percent"] = {k: (100.0 * v / total if total > 0 else 0.0) for k, v in self.timing.items()}
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2) + "\n"


class _Clock:
    def __init__(self):
        self.t = dict.fromkeys(STAGES, 0.0)

    def run(self, stage, fn, *a, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*a, **kw)
        finally:
            self.t[stage] += time.perf_counter() - t0


def alpha_schedule(cfg: PlannerConfig) -> list[float]:
    out = [cfg.alpha_init]
    while out[-1] > cfg.alpha_min + 1e-12:
        out.append(max(out[-1] * cfg.alpha_decay, cfg.alpha_min))
    return out


def plan(scene: Scene, robot: RobotModel, target_id: str, irm: ReachabilityMap, config: PlannerConfig | None = None,
         scores: dict | None = None, verifier: Verifier | None = None) -> PlanResult:
    """Annealed base placement search; raises Infeasible when every level fails.

    ``scores`` may supply precomputed importance scores.  ``verifier`` may
    supply a full-scene Verifier to share its memo with other strategies.
    """
    cfg = config or PlannerConfig()
    if target_id not in scene:
        raise UnknownTarget(f"no object {target_id!r} in scene")
    clock = _Clock()
    if scores is None:
        walk = WalkParams(seed=cfg.seed)
        embed = EmbedParams(seed=cfg.seed)
        try:
            scores = clock.run("importance", predict_importance, scene, target_id, walk, embed)
        except DegenerateCorpus:
            # no relations to learn from; the last level still adds every object
            scores = {k: float(k == target_id) for k in scene.ids}

    K = cfg.waypoints
    tp, W = manipulation_targets(scene, target_id, K)
    rrt = cfg.rrt()
    everything = frozenset(scene.ids)
    verifiers = {}
    if verifier is not None:
        if verifier.subset != everything or verifier.target_id != target_id:
            raise ValueError("shared verifier must cover the full scene and the same target")
        verifiers[everything] = verifier

    def get_verifier(S):
        if S not in verifiers:
            verifiers[S] = Verifier(scene, robot, target_id, S, cfg.seed, K, cfg.resolution, rrt, cfg.ik_restarts)
        return verifiers[S]

    levels = []
    tried = 0
    prev = None
    area = None
    schedule = alpha_schedule(cfg)
    for li, alpha in enumerate(schedule):
        last = li == len(schedule) - 1
        S = everything if last else frozenset(k for k, s in scores.items() if s >= alpha) | {target_id}
        if S == prev and cfg.candidates == "grid":
            continue  # the lattice would repeat exactly
        rec = LevelRecord(float(alpha), sorted(S, key=scene.index), 0, 0)
        levels.append(rec)

        if S != prev:
            # an unchanged subset keeps its area and map but draws fresh samples
            area = clock.run("modeling", candidate_area, scene, S, robot, tp, target_id, K, False)
            if area.grid(cfg.resolution)[2].any():
                clock.run("potential_field", potential_map, area, irm, robot, W, cfg.resolution, cfg.weights)
        prev = S
        check_S = clock.run("modeling", get_verifier, S)
        check_all = clock.run("modeling", get_verifier, everything)
        if not area.grid(cfg.resolution)[2].any():
            continue

        def sample():
            if cfg.candidates == "grid":
                cands = area.cells(cfg.resolution)
            else:
                cands = lhs_sample(area, cfg.M, [cfg.seed, li])
            F = combined_many(area, irm, robot, cands, W, cfg.weights, cfg.resolution)[0] if len(cands) else np.zeros(0)
            return cands, F

        cands, F = clock.run("sampling_tsp", sample)
        rec.candidates = len(cands)
        for group in clock.run("sampling_tsp", group_candidates, cands, F, cfg.T):
            order = clock.run("sampling_tsp", open_tsp_order, cands[group], F[group], check_S.start, cfg.k1, cfg.k1p)
            for k in group[order]:
                xy = cands[k]
                tried += 1
                rec.tried += 1
                v = clock.run("feasibility", check_S.check, xy)
                if v.ok and check_all is not check_S:
                    v = clock.run("feasibility", check_all.check, xy)
                if not v.ok:
                    continue
                rec.winner = int(k)
                path = clock.run("feasibility", check_all.path, xy)
                return PlanResult(
                    target_id, check_all.pose(xy), path, v.trajectory, float(F[k]), tried,
                    float(alpha), levels, dict(clock.t),
                )
    raise Infeasible(f"no feasible base placement for {target_id!r} after {tried} candidates", index=None, reason="exhausted")


def exhaustive_oracle(scene: Scene, robot: RobotModel, target_id: str, config: PlannerConfig | None = None):
    """First feasible cell of the full-scene area lattice, or None.

    Cells are checked in row-major order with the same verifier the planner
    uses for the full scene.
    """
    cfg = config or PlannerConfig()
    tp, _ = manipulation_targets(scene, target_id, cfg.waypoints)
    area = candidate_area(scene, scene.ids, robot, tp, target_id, cfg.waypoints, check_empty=False)
    ver = Verifier(scene, robot, target_id, None, cfg.seed, cfg.waypoints, cfg.resolution, cfg.rrt(), cfg.ik_restarts)
    for xy in area.cells(cfg.resolution):
        if ver.check(xy).ok:
            return xy
    return None
