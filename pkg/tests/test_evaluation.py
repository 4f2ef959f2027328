from __future__ import annotations

import math

import pytest

from momapos.evaluation import EvalRow, aggregate_rows, evaluate, timing_breakdown, trial_seed
from momapos.scene import scene_from_dict
from momapos.suites import open_table_variant, suite

STRATS = ["momapos", "habitat", "m3star", "reuleaux"]


@pytest.fixture(scope="module")
def scenes():
    return [scene_from_dict(open_table_variant(k)) for k in range(2)]


@pytest.fixture(scope="module")
def report(scenes, generic6, irm6):
    return evaluate(scenes, ["apple", "nope"], STRATS, 2, 0, generic6, irm6)


def test_rows_in_canonical_order(report, scenes):
    keys = [(r.scene, r.task, r.strategy, r.trial) for r in report.rows]
    expect = [(s.name, t, st, k) for s in scenes for t in ("apple", "nope") for st in STRATS for k in range(2)]
    assert keys == expect


def test_missing_target_becomes_error_rows(report):
    bad = [r for r in report.rows if r.task == "nope"]
    assert bad and all(not r.success and r.reason == "error:UnknownTarget" for r in bad)


def test_rigid_task_all_succeed(report):
    for s in STRATS:
        assert report.srate(s, "apple") == 100.0
    ok = [r for r in report.rows if r.task == "apple"]
    assert all(r.cost_m > 0 and math.isfinite(r.x) for r in ok)


def test_audit_and_aggregates(report):
    assert report.audit()
    for a in report.aggregates:
        rs = [r for r in report.rows if r.task == a.task and r.strategy == a.strategy]
        assert a.trials == len(rs) == 4
        assert a.srate == 100.0 * sum(r.success for r in rs) / len(rs)


def test_breakdown_sums_to_100(report):
    b = report.breakdown()
    assert sum(b.values()) == pytest.approx(100.0, abs=0.1)


def test_outputs(report):
    csv = report.to_csv().splitlines()
    assert csv[0] == "scene,task,strategy,trial,success,reason,time_s,cost_m,x,y,yaw"
    assert len(csv) == 1 + len(report.rows)
    text = report.summary()
    assert '"seed": 0' in text and "SRate (%)" in text and "importance" in text
    d = report.to_dict(timing=False)
    assert all("time_s" not in r for r in d["rows"])


def test_threads_give_identical_rows(scenes, generic6, irm6, monkeypatch, report):
    monkeypatch.setenv("MOMAPOS_THREADS", "3")
    again = evaluate(scenes, ["apple", "nope"], STRATS, 2, 0, generic6, irm6)
    assert [r.key() for r in again.rows] == [r.key() for r in report.rows]


def test_per_scene_tasks(scenes, generic6, irm6):
    rep = evaluate(scenes, [["apple"], ["bowl"]], ["habitat"], 1, 0, generic6, irm6)
    assert [(r.scene, r.task) for r in rep.rows] == [(scenes[0].name, "apple"), (scenes[1].name, "bowl")]
    with pytest.raises(ValueError):
        evaluate(scenes, [["apple"]], ["habitat"], 1, 0, generic6, irm6)


def test_bad_inputs(scenes, generic6, irm6):
    with pytest.raises(ValueError):
        evaluate(scenes, ["apple"], ["teleport"], 1, 0, generic6, irm6)
    with pytest.raises(ValueError):
        evaluate(scenes, ["apple"], ["habitat"], 0, 0, generic6, irm6)
    with pytest.raises(ValueError):
        evaluate([], ["apple"], ["habitat"], 1, 0, generic6, irm6)


def test_aggregate_time_over_all_cost_over_successes():
    rows = [
        EvalRow("s", "t", "x", 0, True, "ok", 1.0, 2.0),
        EvalRow("s", "t", "x", 1, False, "nav", 3.0, math.nan),
        EvalRow("s", "t", "x", 2, True, "ok", 2.0, 4.0),
    ]
    (a,) = aggregate_rows(rows)
    assert a.time_mean == pytest.approx(2.0) and a.time_std == pytest.approx(math.sqrt(2 / 3))
    assert a.cost_mean == pytest.approx(3.0) and a.cost_std == pytest.approx(1.0)
    assert a.srate == pytest.approx(200 / 3)


def test_timing_breakdown_normalises():
    rows = [EvalRow("s", "t", "momapos", 0, True, "ok", 1.0, 1.0, breakdown={"importance": 1.0, "feasibility": 3.0})]
    b = timing_breakdown(rows)
    assert b["importance"] == pytest.approx(25.0) and b["feasibility"] == pytest.approx(75.0)
    assert timing_breakdown([])["importance"] == 0.0


def test_trial_seeds():
    assert trial_seed(0, 1) == trial_seed(0, 1)
    assert len({trial_seed(s, t) for s in range(5) for t in range(5)}) == 25


def test_fridge_suite_rows_verify(generic6, irm6):
    # the first two fridge variants: momapos passes the shared check, habitat does not
    rep = evaluate(suite("fridge")[:2], ["fridge"], ["momapos", "habitat"], 1, 0, generic6, irm6)
    assert rep.srate("momapos") == 100.0 and rep.srate("habitat") == 0.0
