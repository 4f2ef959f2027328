"""Why the door sweep matters.

The habitat-style baseline parks straight in front of the fridge, which is
exactly where the door swings open.  The planner models the sweep and
parks beside it.  Both poses go through the same full-scene verifier.

    python demos/02_door_sweep.py [--variants N] [--trials N]
"""

from __future__ import annotations

import argparse

from momapos.evaluation import evaluate
from momapos.kinematics import preset
from momapos.reachability import build_irm
from momapos.suites import suite


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--variants", type=int, default=5)
    ap.add_argument("--trials", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    robot = preset("generic6")
    irm = build_irm(robot, seed=args.seed)
    scenes = suite("fridge")[: args.variants]
    rep = evaluate(scenes, ["fridge"], ["momapos", "habitat"], args.trials, args.seed, robot, irm)

    for r in rep.rows:
        where = f"({r.x:.2f}, {r.y:.2f})"
        print(f"{r.scene:<10} {r.strategy:<8} trial {r.trial}: {'ok ' if r.success else 'FAIL'} {where:>14}  {r.reason}")
    print()
    print(rep.table_i())


if __name__ == "__main__":
    main()
