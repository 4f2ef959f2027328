from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from momapos.cli import SYNOPSIS, main
from momapos.scene import save_scene, scene_from_dict
from momapos.suites import box_object


@pytest.fixture(scope="module")
def irm_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "g6.irm"
    assert main(["irm", "build", "--robot", "generic6", "--samples", "300000", "--out", str(p)]) == 0
    return str(p)


def run(argv, capsys):
    rc = main(argv)
    out, err = capsys.readouterr()
    return rc, out, err


def read_pgm(path):
    raw = open(path, "rb").read()
    lines = raw.split(b"\n", 4)
    comment = lines[1].decode().split()
    nx, ny = map(int, lines[2].split())
    img = np.frombuffer(lines[4], dtype=np.uint8).reshape(ny, nx)
    res = float(comment[comment.index("resolution") + 1])
    origin = (float(comment[-2]), float(comment[-1]))
    return img, res, origin


def test_usage_errors(capsys):
    rc, _, err = run(["plan", "--target", "fridge"], capsys)
    assert rc == 2 and err.startswith(SYNOPSIS) and "--scene" in err
    rc, _, err = run([], capsys)
    assert rc == 2 and "command" in err
    rc, _, err = run(["teleport"], capsys)
    assert rc == 2
    rc, _, err = run(["irm"], capsys)
    assert rc == 2


def test_io_errors(capsys, tmp_path, irm_file):
    rc, _, _ = run(["plan", "--scene", str(tmp_path / "missing.json"), "--target", "x", "--irm", irm_file], capsys)
    assert rc == 2
    bad = tmp_path / "bad.irm"
    bad.write_bytes(b"nope")
    rc, _, _ = run(["irm", "info", "--irm", str(bad)], capsys)
    assert rc == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"M": 0}')
    rc, _, err = run(["plan", "--scene", "kitchen", "--target", "fridge", "--config", str(cfg), "--irm", irm_file], capsys)
    assert rc == 2 and "config" in err


def test_infeasible_exit_code(capsys, tmp_path, irm_file):
    s = scene_from_dict({"floor": {"min": [0, 0], "max": [2, 2]},
                         "objects": [box_object("slab", (0, 0, 0), (2, 2, 0.5)),
                                     box_object("cup", (0.95, 0.95, 0.5), (1.05, 1.05, 0.6))],
                         "relations": []})
    p = tmp_path / "slab.json"
    save_scene(s, p)
    rc, _, err = run(["plan", "--scene", str(p), "--target", "cup", "--irm", irm_file], capsys)
    assert rc == 1 and err.startswith("infeasible")


def test_irm_info(capsys, irm_file):
    rc, out, _ = run(["irm", "info", "--irm", irm_file], capsys)
    info = json.loads(out)
    assert rc == 0 and info["robot"] == "generic6" and info["seed"] == 0


def test_irm_csv(tmp_path, capsys):
    p = tmp_path / "m.csv"
    rc, _, _ = run(["irm", "build", "--robot", "planar2", "--samples", "1000", "--csv", "--out", str(p)], capsys)
    assert rc == 0 and p.read_text().count("\n") > 1


def test_plan_report(capsys, irm_file):
    rc, out, _ = run(["plan", "--scene", "kitchen", "--target", "fridge", "--irm", irm_file, "--seed", "7"], capsys)
    d = json.loads(out)
    assert rc == 0
    assert d["config"]["seed"] == 7 and d["target"] == "fridge"
    assert sum(d["timing_percent"].values()) == pytest.approx(100.0, abs=0.1)


def test_importance_outputs(capsys, tmp_path):
    rc, out, _ = run(["importance", "--scene", "kitchen", "--target", "milk", "--alpha", "0.4"], capsys)
    d = json.loads(out)
    assert rc == 0 and d["scores"][0] == {"id": "milk", "score": 1.0}
    assert "milk" in d["selected"]
    p = tmp_path / "s.csv"
    assert main(["importance", "--scene", "kitchen", "--target", "milk", "--out", str(p)]) == 0
    assert p.read_text().splitlines()[0].startswith("id")
    rc, _, _ = run(["importance", "--scene", "kitchen", "--target", "milk", "--alpha", "2"], capsys)
    assert rc == 2


def test_render_peak_on_handle_side(tmp_path, irm_file, kitchen):
    p = tmp_path / "m.pgm"
    assert main(["render", "--scene", "kitchen", "--target", "fridge", "--irm", irm_file, "--out", str(p)]) == 0
    img, res, origin = read_pgm(p)
    iy, ix = np.unravel_index(int(np.argmax(img)), img.shape)
    x = origin[0] + ix * res
    f = kitchen.get("fridge")
    hinge_x, handle_x = f.joint.pivot[0], f.joint.handle_home[0]
    assert abs(x - handle_x) < abs(x - hinge_x)
    c = tmp_path / "m.csv"
    assert main(["render", "--scene", "kitchen", "--target", "fridge", "--irm", irm_file, "--out", str(c)]) == 0
    assert c.read_text().splitlines()[1] == "x,y,member,field,irm,combined"


def _strip_time(csv_text):
    rows = [line.split(",") for line in csv_text.splitlines()]
    k = rows[0].index("time_s")
    return [r[:k] + r[k + 1 :] for r in rows]


def test_eval_suite(capsys, irm_file, tmp_path):
    summary = tmp_path / "sum.txt"
    argv = ["eval", "--suite", "table", "--limit", "2", "--trials", "1", "--irm", irm_file, "--summary", str(summary)]
    rc, out, _ = run(argv, capsys)
    assert rc == 0
    rows = _strip_time(out)
    assert len(rows) == 1 + 2 * 4
    assert all(r[4] == "1" for r in rows[1:])
    assert "SRate" in summary.read_text()
    rc, _, _ = run(["eval", "--suite", "table", "--trials", "0", "--irm", irm_file], capsys)
    assert rc == 2


def test_entry_point_runs():
    r = subprocess.run([sys.executable, "-m", "momapos.cli", "irm"], capture_output=True, text=True)
    assert r.returncode == 2 and "usage: momapos" in r.stderr
