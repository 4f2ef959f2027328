"""Evaluation harness: run strategies over scenes and tasks, verify, aggregate.

Every (scene, task, trial) gets one full-scene Verifier that all strategies
share, so a base pose gets the same verdict whoever proposes it.  Rows are
independent; they may run on worker threads (``MOMAPOS_THREADS``) but the
report is always assembled in (scene, task, strategy, trial) order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import STRATEGIES, BaselineParams, habitat_placement, m3star_placement, reuleaux_placement
from .errors import Infeasible, MomaposError
from .kinematics import RobotModel
from .reachability import ReachabilityMap
from .scene import Scene
from .search import STAGES, PlannerConfig, Verifier, plan

ROW_FIELDS = ("scene", "task", "strategy", "trial", "success", "reason", "time_s", "cost_m", "x", "y", "yaw")


@dataclass
class EvalRow:
    scene: str
    task: str
    strategy: str
    trial: int
    success: bool
    reason: str
    time_s: float
    cost_m: float  # nan unless success
    x: float = math.nan
    y: float = math.nan
    yaw: float = math.nan
    breakdown: dict = field(default_factory=dict)  # stage -> seconds, momapos only

    def key(self) -> tuple:
        """Row identity without wall-clock fields."""
        return (self.scene, self.task, self.strategy, self.trial, self.success, self.reason,
                _r(self.cost_m), _r(self.x), _r(self.y), _r(self.yaw))


def _r(v: float):
    return None if math.isnan(v) else round(v, 9)


@dataclass
class Aggregate:
    task: str
    strategy: str
    trials: int
    successes: int
    time_mean: float
    time_std: float
    cost_mean: float
    cost_std: float

    @property
    def srate(self) -> float:
        return 100.0 * self.successes / self.trials if self.trials else 0.0


def _mean_std(v) -> tuple[float, float]:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    return float(v.mean()), float(v.std())


def aggregate_rows(rows: list[EvalRow]) -> list[Aggregate]:
    """Per (task, strategy): Time over all trials, Cost over successful ones."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.task, r.strategy), []).append(r)
    out = []
    for (task, strat), rs in groups.items():
        tm, ts = _mean_std([r.time_s for r in rs])
        cm, cs = _mean_std([r.cost_m for r in rs if r.success])
        out.append(Aggregate(task, strat, len(rs), sum(r.success for r in rs), tm, ts, cm, cs))
    return out


def timing_breakdown(rows: list[EvalRow]) -> dict:
    """Percent of summed planner time per stage; sums to 100 when any time was spent."""
    tot = dict.fromkeys(STAGES, 0.0)
    for r in rows:
        for k, v in r.breakdown.items():
            tot[k] = tot.get(k, 0.0) + v
    s = sum(tot.values())
    return {k: (100.0 * v / s if s > 0 else 0.0) for k, v in tot.items()}


@dataclass
class EvalReport:
    rows: list
    seed: int
    trials: int
    baseline_params: dict
    planner_config: dict

    @property
    def aggregates(self) -> list[Aggregate]:
        return aggregate_rows(self.rows)

    def srate(self, strategy: str, task: str | None = None) -> float:
        rs = [r for r in self.rows if r.strategy == strategy and (task is None or r.task == task)]
        return 100.0 * sum(r.success for r in rs) / len(rs) if rs else 0.0

    def breakdown(self) -> dict:
        return timing_breakdown([r for r in self.rows if r.strategy == "momapos"])

    def audit(self) -> bool:
        """Recompute the aggregates from the rows in a second, independent pass."""
        for a in self.aggregates:
            rs = [r for r in self.rows if r.task == a.task and r.strategy == a.strategy]
            ok = [r for r in rs if r.success]
            if a.trials != len(rs) or a.successes != len(ok):
                return False
            if not math.isclose(a.srate, 100.0 * len(ok) / len(rs)):
                return False
            times = [r.time_s for r in rs]
            mu = sum(times) / len(times)
            sd = math.sqrt(sum((t - mu) ** 2 for t in times) / len(times))
            if not (math.isclose(a.time_mean, mu, abs_tol=1e-12) and math.isclose(a.time_std, sd, abs_tol=1e-9)):
                return False
        return True

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in self.rows:
            w.writerow([r.scene, r.task, r.strategy, r.trial, int(r.success), r.reason,
                        f"{r.time_s:.6f}", _fmt(r.cost_m), _fmt(r.x), _fmt(r.y), _fmt(r.yaw)])
        return buf.getvalue()

    def table_i(self) -> str:
        """Task x strategy table of Time (s), Cost (m) and SRate (%)."""
        aggs = {(a.task, a.strategy): a for a in self.aggregates}
        tasks = list(dict.fromkeys(r.task for r in self.rows))
        strats = list(dict.fromkeys(r.strategy for r in self.rows))
        lines = [f"{'task':<16}{'strategy':<10}{'Time (s)':>18}{'Cost (m)':>18}{'SRate (%)':>11}"]
        for t in tasks:
            for s in strats:
                a = aggs.get((t, s))
                if a is None:
                    continue
                lines.append(f"{t:<16}{s:<10}{_pm(a.time_mean, a.time_std):>18}{_pm(a.cost_mean, a.cost_std):>18}{a.srate:>11.1f}")
        return "\n".join(lines) + "\n"

    def table_iii(self) -> str:
        """Stage share of momapos planning time, in percent."""
        b = self.breakdown()
        lines = [f"{'stage':<18}{'percent':>9}"]
        lines += [f"{k:<18}{v:>9.2f}" for k, v in b.items()]
        lines.append(f"{'total':<18}{sum(b.values()):>9.2f}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        head = {"seed": self.seed, "trials": self.trials, "baseline_params": self.baseline_params}
        return json.dumps(head, sort_keys=True) + "\n\n" + self.table_i() + "\n" + self.table_iii()

    def to_dict(self, timing: bool = True) -> dict:
        rows = []
        for r in self.rows:
            d = asdict(r)
            for k in ("cost_m", "x", "y", "yaw"):
                d[k] = None if math.isnan(d[k]) else d[k]
            if not timing:
                d.pop("time_s")
                d.pop("breakdown")
            rows.append(d)
        out = {"seed": self.seed, "trials": self.trials, "baseline_params": self.baseline_params,
               "planner_config": self.planner_config, "rows": rows}
        if timing:
            out["breakdown_percent"] = self.breakdown()
        return out


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else f"{v:.6f}"


def _pm(m: float, s: float) -> str:
    return "-" if math.isnan(m) else f"{m:.2f} ± {s:.2f}"


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1)[0])


def _place(strategy, scene, robot, task, irm, cfg, params, seed, verifier):
    """(BasePose, breakdown) for one strategy; raises Infeasible on failure."""
    if strategy == "momapos":
        res = plan(scene, robot, task, irm, PlannerConfig.from_dict({**cfg.to_dict(), "seed": seed}), verifier=verifier)
        return res.base_pose, res.timing
    if strategy == "habitat":
        return habitat_placement(scene, robot, task, params), {}
    if strategy == "m3star":
        return m3star_placement(scene, robot, task, seed, params), {}
    if strategy == "reuleaux":
        return reuleaux_placement(scene, robot, task, irm, seed, params), {}
    raise ValueError(f"unknown strategy {strategy!r}")


def _run_group(scene: Scene, task: str, trial: int, strategies, robot, irm, cfg, params, seed) -> list[EvalRow]:
    ts = trial_seed(seed, trial)
    rows = []
    try:
        ver = Verifier(scene, robot, task, None, ts, cfg.waypoints, cfg.resolution, cfg.rrt(), cfg.ik_restarts)
    except MomaposError as e:
        return [EvalRow(scene.name, task, s, trial, False, f"error:{type(e).__name__}", 0.0, math.nan) for s in strategies]
    for s in strategies:
        t0 = time.perf_counter()
        try:
            pose, bd = _place(s, scene, robot, task, irm, cfg, params, ts, ver)
        except Infeasible as e:
            rows.append(EvalRow(scene.name, task, s, trial, False, f"infeasible:{e.reason}", time.perf_counter() - t0, math.nan))
            continue
        except (MomaposError, ValueError) as e:
            rows.append(EvalRow(scene.name, task, s, trial, False, f"error:{type(e).__name__}", time.perf_counter() - t0, math.nan))
            continue
        dt = time.perf_counter() - t0
        v = ver.check(pose.xy, pose.yaw)
        x, y, yaw = float(pose.xy[0]), float(pose.xy[1]), float(pose.yaw)
        cost = ver.path(pose.xy).length if v.ok else math.nan
        rows.append(EvalRow(scene.name, task, s, trial, v.ok, v.reason, dt, cost, x, y, yaw, dict(bd)))
    return rows


def worker_count() -> int:
    v = os.environ.get("MOMAPOS_THREADS", "1")
    try:
        return max(int(v), 1)
    except ValueError:
        return 1


def evaluate(scenes: list, tasks: list, strategies: list, trials: int, seed: int, robot: RobotModel,
             irm: ReachabilityMap, config: PlannerConfig | None = None, params: BaselineParams | None = None) -> EvalReport:
    """Run every (scene, task, strategy, trial) and verify with the shared checker.

    ``tasks`` is either one list of target ids applied to every scene or a
    list of per-scene lists.  Failures, including missing targets, become
    rows; nothing aborts the run.
    """
    if not scenes or not tasks or not strategies or trials < 1:
        raise ValueError("scenes, tasks, strategies and trials >= 1 are required")
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}; choose from {STRATEGIES}")
    cfg = config or PlannerConfig()
    params = params or BaselineParams()
    per_scene = tasks if isinstance(tasks[0], (list, tuple)) else [tasks] * len(scenes)
    if len(per_scene) != len(scenes):
        raise ValueError("need one task list per scene")
    jobs = [(sc, t, k) for sc, ts in zip(scenes, per_scene) for t in ts for k in range(trials)]

    def run(job):
        sc, t, k = job
        return _run_group(sc, t, k, strategies, robot, irm, cfg, params, seed)

    n = worker_count()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            groups = list(ex.map(run, jobs))
    else:
        groups = [run(j) for j in jobs]
    # (scene, task, strategy, trial) order
    rows = []
    i = 0
    for sc, ts in zip(scenes, per_scene):
        for t in ts:
            block = groups[i:i + trials]
            i += trials
            for si in range(len(strategies)):
                rows += [g[si] for g in block]
    return EvalReport(rows, int(seed), int(trials), asdict(params), cfg.to_dict())
