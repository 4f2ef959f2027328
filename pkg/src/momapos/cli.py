"""Command-line interface.

    momapos irm build --robot R [--samples N] [--voxel V] --out map.irm
    momapos irm info --irm map.irm
    momapos plan --scene S --robot R --target T [--irm map.irm] [--out report.json]
    momapos importance --scene S --target T [--out scores.json]
    momapos render --scene S --robot R --target T [--irm map.irm] --out map.pgm|map.csv
    momapos eval (--suite NAME | --scene S --target T ...) [--strategies ...] [--trials N] [--out rows.csv]

``--scene`` and ``--robot`` take a file path or the name of a shipped
fixture (``kitchen``; ``generic6``, ``short6``, ``tall6``, ``planar2``).
Without ``--irm`` a map is built in memory from ``--seed``.  All randomness
flows from ``--seed``.  Exit codes: 0 success, 1 infeasible, 2 usage or IO
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .baselines import STRATEGIES, BaselineParams
from .errors import Infeasible, MomaposError
from .evaluation import evaluate
from .importance import EmbedParams, WalkParams, predict_importance, select_objects
from .kinematics import PRESETS, load_robot, preset
from .placement import candidate_area, manipulation_targets, potential_map
from .reachability import build_irm, load_irm, save_irm
from .scene import load_scene, scene_from_dict
from .search import PlannerConfig, plan
from .suites import suite

SYNOPSIS = """usage: momapos [--scene S] [--robot R] [--config C] [--seed N] [--out PATH] <command> ...
commands: irm build|info, plan, importance, render, eval"""

SCENES = ("kitchen",)
SUITES = ("fridge", "table", "desk")
SUITE_TASKS = {"fridge": "fridge", "table": "apple", "desk": "target"}

GLOBALS = {"scene": None, "robot": "generic6", "config": None, "seed": 0, "out": None, "target": None, "irm": None}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_globals(p: argparse.ArgumentParser) -> None:
    # SUPPRESS lets the flags appear before or after the subcommand
    g = p.add_argument_group("global options")
    g.add_argument("--scene", default=argparse.SUPPRESS, help="scene JSON path or fixture name")
    g.add_argument("--robot", default=argparse.SUPPRESS, help="robot JSON path or preset name")
    g.add_argument("--config", default=argparse.SUPPRESS, help="planner config JSON")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default 0)")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output path (default stdout)")
    g.add_argument("--target", default=argparse.SUPPRESS, help="target object id")
    g.add_argument("--irm", default=argparse.SUPPRESS, help="reachability map file")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="momapos", description="Base placement planning for mobile manipulators.")
    _add_globals(p)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    irm = sub.add_parser("irm", help="build or inspect a reachability map")
    _add_globals(irm)
    irm_sub = irm.add_subparsers(dest="irm_command", parser_class=_Parser)
    b = irm_sub.add_parser("build", help="sample the arm and bin end-effector hits")
    _add_globals(b)
    b.add_argument("--samples", type=int, default=2_000_000)
    b.add_argument("--voxel", type=float, default=0.05)
    b.add_argument("--csv", action="store_true", help="write nonzero voxels as CSV instead of the binary format")
    i = irm_sub.add_parser("info", help="print map metadata as JSON")
    _add_globals(i)

    pl = sub.add_parser("plan", help="plan a base placement for one target")
    _add_globals(pl)
    pl.add_argument("--no-timing", action="store_true", help="omit timing fields from the report")

    im = sub.add_parser("importance", help="importance scores of all objects for a target")
    _add_globals(im)
    im.add_argument("--alpha", type=float, default=None, help="also list the objects selected at this threshold")

    r = sub.add_parser("render", help="write the full-scene potential map as PGM or CSV")
    _add_globals(r)
    r.add_argument("--format", choices=("pgm", "csv"), default=None, help="default: from the --out suffix")

    ev = sub.add_parser("eval", help="run strategies over scenes and report Time, Cost and SRate")
    _add_globals(ev)
    ev.add_argument("--suite", choices=SUITES, default=None)
    ev.add_argument("--strategies", nargs="+", choices=STRATEGIES, default=list(STRATEGIES))
    ev.add_argument("--trials", type=int, default=5)
    ev.add_argument("--limit", type=int, default=None, help="use only the first N suite scenes")
    ev.add_argument("--summary", default=None, help="write the text summary here (default stderr)")
    ev.add_argument("--standoff", type=float, default=BaselineParams.standoff)
    ev.add_argument("--budget", type=int, default=BaselineParams.budget)
    return p


def _opt(args, name):
    return getattr(args, name, GLOBALS[name])


def _need(args, name):
    v = _opt(args, name)
    if v is None:
        raise UsageError(f"--{name} is required")
    return v


def _scene(spec):
    if not Path(spec).exists() and spec in SCENES:
        text = resources.files("momapos.data").joinpath(f"{spec}.json").read_text(encoding="utf-8")
        return scene_from_dict(json.loads(text))
    return load_scene(spec)


def _robot(spec):
    name = spec[:-5] if spec.endswith(".json") else spec
    if not Path(spec).exists() and name in PRESETS:
        return preset(name)
    return load_robot(spec)


def _config(args) -> PlannerConfig:
    path = _opt(args, "config")
    d = {}
    if path is not None:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(d, dict):
            raise UsageError("config must be a JSON object")
    d["seed"] = _opt(args, "seed")
    try:
        return PlannerConfig.from_dict(d)
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad config: {e}") from None


def _irm(args, robot):
    path = _opt(args, "irm")
    if path is not None:
        return load_irm(path)
    return build_irm(robot, seed=_opt(args, "seed"))


def _emit(args, text: str) -> None:
    out = _opt(args, "out")
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_irm(args) -> int:
    if args.irm_command == "build":
        robot = _robot(_opt(args, "robot"))
        if args.samples < 1 or args.voxel <= 0:
            raise UsageError("--samples must be >= 1 and --voxel > 0")
        irm = build_irm(robot, args.samples, args.voxel, _opt(args, "seed"))
        out = _need(args, "out")
        if args.csv:
            irm.to_csv(out)
        else:
            save_irm(irm, out)
        return 0
    if args.irm_command == "info":
        irm = load_irm(_need(args, "irm"))
        _emit(args, json.dumps(irm.info(), indent=2, sort_keys=True) + "\n")
        return 0
    raise UsageError("irm needs a subcommand: build or info")


def cmd_plan(args) -> int:
    scene = _scene(_need(args, "scene"))
    robot = _robot(_opt(args, "robot"))
    target = _need(args, "target")
    cfg = _config(args)
    irm = _irm(args, robot)
    res = plan(scene, robot, target, irm, cfg)
    d = res.to_dict(timing=not args.no_timing)
    d = {"config": cfg.to_dict(), **d}
    _emit(args, json.dumps(d, indent=2) + "\n")
    return 0


def cmd_importance(args) -> int:
    scene = _scene(_need(args, "scene"))
    target = _need(args, "target")
    seed = _opt(args, "seed")
    scores = predict_importance(scene, target, WalkParams(seed=seed), EmbedParams(seed=seed))
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], scene.index(kv[0])))
    d = {"target": target, "seed": seed, "scores": [{"id": k, "score": v} for k, v in ranked]}
    if args.alpha is not None:
        if not 0.0 <= args.alpha <= 1.0:
            raise UsageError("--alpha must lie in [0, 1]")
        d["alpha"] = args.alpha
        d["selected"] = [k for k, v in ranked if v >= args.alpha or k == target]
    out = _opt(args, "out")
    if out is not None and out.endswith(".csv"):
        res = select_objects(dict(ranked), 1.0 if args.alpha is None else args.alpha, target)
        _emit(args, res.to_csv())
        return 0
    _emit(args, json.dumps(d, indent=2) + "\n")
    return 0


def cmd_render(args) -> int:
    scene = _scene(_need(args, "scene"))
    robot = _robot(_opt(args, "robot"))
    target = _need(args, "target")
    out = _need(args, "out")
    cfg = _config(args)
    fmt = args.format or ("csv" if out.endswith(".csv") else "pgm")
    irm = _irm(args, robot)
    tp, W = manipulation_targets(scene, target, cfg.waypoints)
    area = candidate_area(scene, scene.ids, robot, tp, target, cfg.waypoints, check_empty=False)
    pm = potential_map(area, irm, robot, W, cfg.resolution, cfg.weights)
    if fmt == "csv":
        pm.to_csv(out)
    else:
        pm.to_pgm(out)
    return 0


def cmd_eval(args) -> int:
    robot = _robot(_opt(args, "robot"))
    seed = _opt(args, "seed")
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.suite is not None:
        scenes = suite(args.suite)[: args.limit]
        tasks = [SUITE_TASKS[args.suite]]
    else:
        scenes = [_scene(_need(args, "scene"))]
        tasks = _need(args, "target").split(",")
    try:
        params = BaselineParams(standoff=args.standoff, budget=args.budget)
    except ValueError as e:
        raise UsageError(str(e)) from None
    irm = _irm(args, robot)
    report = evaluate(scenes, tasks, args.strategies, args.trials, seed, robot, irm, _config(args), params)
    _emit(args, report.to_csv())
    if args.summary:
        Path(args.summary).write_text(report.summary(), encoding="utf-8")
    else:
        sys.stderr.write(report.summary())
    return 0


COMMANDS = {"irm": cmd_irm, "plan": cmd_plan, "importance": cmd_importance, "render": cmd_render, "eval": cmd_eval}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        return COMMANDS[args.command](args)
    except UsageError as e:
        sys.stderr.write(f"{SYNOPSIS}\nerror: {e}\n")
        return 2
    except Infeasible as e:
        sys.stderr.write(f"infeasible: {e}\n")
        return 1
    except (OSError, MomaposError, KeyError, json.JSONDecodeError) as e:
        sys.stderr.write(f"{SYNOPSIS}\nerror: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
