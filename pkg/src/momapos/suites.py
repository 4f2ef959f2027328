"""Scene builders for the evaluation suites and the kitchen fixture.

Fridges stand against a wall with their front face toward -y and the door
hinged on the east edge, so the door swings open toward the room and east.
"""

from __future__ import annotations

import numpy as np

from .scene import Scene, scene_from_dict


def _box(lo, hi) -> dict:
    return {"min": [float(v) for v in lo], "max": [float(v) for v in hi]}


def box_object(oid, lo, hi) -> dict:
    return {"id": oid, "kind": "rigid", "bbox": _box(lo, hi)}


def fridge_object(
    oid: str = "fridge",
    x0: float = 1.0,
    y_front: float = 4.15,
    width: float = 0.9,
    depth: float = 0.85,
    height: float = 1.8,
    handle_z: float = 1.0,
    open_angle: float = np.radians(75.0),
    panel: float = 0.05,
    handle_offset: float = 0.05,
    handle_inset: float = -0.04,
) -> dict:
    """A fridge whose door panel forms the front ``panel`` meters of its box.

    The hinge is the east front edge.  The handle sits ``handle_offset`` in
    front of the panel and ``handle_inset`` in from its free (west) edge; the
    default negative inset puts it just past the edge, where a hand can hold
    it from either side of the door.
    """
    x1 = x0 + width
    pivot = [x1, y_front, 0.0]
    return {
        "id": oid,
        "kind": "articulated",
        "bbox": _box([x0, y_front, 0.0], [x1, y_front + depth, height]),
        "joint": {
            "pivot": pivot,
            # right-hinged: -theta about -z, i.e. counter-clockwise seen from above
            "axis": [0.0, 0.0, -1.0],
            "handle_home": [x0 + handle_inset, y_front - handle_offset, handle_z],
            "panel_home": _box([x0, y_front, 0.0], [x1, y_front + panel, height]),
            "angle_range": [0.0, float(open_angle)],
            "hinge_side": "right",
        },
    }


def microwave_object(oid, x0, y_front, width=0.5, depth=0.35, z0=0.9, height=0.3) -> dict:
    """Small left-hinged appliance on a counter, door opening toward -y."""
    x1 = x0 + width
    return {
        "id": oid,
        "kind": "articulated",
        "bbox": _box([x0, y_front, z0], [x1, y_front + depth, z0 + height]),
        "joint": {
            "pivot": [x0, y_front, z0],
            "axis": [0.0, 0.0, 1.0],
            "handle_home": [x1 - 0.04, y_front - 0.05, z0 + height / 2],
            "panel_home": _box([x0, y_front, z0], [x1, y_front + 0.03, z0 + height]),
            "angle_range": [0.0, float(np.radians(90.0))],
            "hinge_side": "right",
        },
    }


def _on(parent, child):
    return {"parent": parent, "child": child, "relation": "on"}


def _inside(parent, child):
    return {"parent": parent, "child": child, "relation": "inside"}


def kitchen_dict() -> dict:
    """The 30-object kitchen: fridge, counters, a microwave, a dining set and a shelf."""
    objs = [
        fridge_object(),
        box_object("counter_a", (2.05, 4.4, 0.0), (3.6, 5.0, 0.9)),
        microwave_object("microwave", 2.95, 4.55),
        box_object("sink_counter", (3.8, 4.4, 0.0), (5.4, 5.0, 0.9)),
        box_object("cutting_board", (2.2, 4.5, 0.9), (2.6, 4.8, 0.92)),
        box_object("knife_block", (2.7, 4.75, 0.9), (2.82, 4.9, 1.15)),
        box_object("kettle", (3.9, 4.6, 0.9), (4.1, 4.8, 1.15)),
        box_object("toaster", (4.3, 4.65, 0.9), (4.6, 4.85, 1.1)),
        box_object("fruit_bowl", (4.75, 4.55, 0.9), (5.05, 4.85, 1.0)),
        box_object("apple", (4.86, 4.66, 1.0), (4.94, 4.74, 1.08)),
        box_object("mug", (5.15, 4.5, 0.9), (5.25, 4.6, 1.0)),
        box_object("plate", (3.9, 4.45, 0.9), (4.15, 4.55, 0.92)),
        box_object("table", (2.5, 1.5, 0.0), (3.7, 2.3, 0.75)),
        box_object("chair_n", (2.9, 2.45, 0.0), (3.3, 2.85, 0.9)),
        box_object("chair_s", (2.9, 0.95, 0.0), (3.3, 1.35, 0.9)),
        box_object("chair_w", (1.95, 1.7, 0.0), (2.35, 2.1, 0.9)),
        box_object("chair_e", (3.85, 1.7, 0.0), (4.25, 2.1, 0.9)),
        box_object("cup", (2.7, 1.7, 0.75), (2.78, 1.78, 0.85)),
        box_object("vase", (3.05, 1.85, 0.75), (3.15, 1.95, 1.05)),
        box_object("book", (3.3, 1.6, 0.75), (3.5, 1.75, 0.78)),
        box_object("napkin", (2.6, 2.05, 0.75), (2.8, 2.2, 0.76)),
        box_object("shelf", (5.55, 1.0, 0.0), (5.95, 2.5, 1.8)),
        box_object("box_a", (5.6, 1.1, 0.4), (5.9, 1.4, 0.7)),
        box_object("box_b", (5.6, 1.6, 0.4), (5.9, 1.9, 0.7)),
        box_object("jar", (5.65, 2.1, 1.0), (5.8, 2.25, 1.2)),
        box_object("trash_bin", (0.1, 3.0, 0.0), (0.45, 3.35, 0.6)),
        box_object("plant", (5.4, 0.15, 0.0), (5.8, 0.55, 1.2)),
        box_object("milk", (1.2, 4.4, 1.0), (1.3, 4.5, 1.25)),
        box_object("juice", (1.4, 4.4, 1.0), (1.5, 4.5, 1.25)),
        box_object("eggs", (1.5, 4.6, 0.8), (1.75, 4.75, 0.88)),
    ]
    rels = [
        _on("counter_a", "microwave"),
        _on("counter_a", "cutting_board"),
        _on("counter_a", "knife_block"),
        _on("sink_counter", "kettle"),
        _on("sink_counter", "toaster"),
        _on("sink_counter", "fruit_bowl"),
        {"parent": "fruit_bowl", "child": "apple", "relation": "in"},
        _on("sink_counter", "mug"),
        _on("sink_counter", "plate"),
        _on("table", "cup"),
        _on("table", "vase"),
        _on("table", "book"),
        _on("table", "napkin"),
        _inside("shelf", "box_a"),
        _inside("shelf", "box_b"),
        _inside("shelf", "jar"),
        _inside("fridge", "milk"),
        _inside("fridge", "juice"),
        _inside("fridge", "eggs"),
    ]
    return {
        "name": "kitchen",
        "floor": {"min": [0.0, 0.0], "max": [6.0, 5.0]},
        "start": [1.0, 0.6],
        "objects": objs,
        "relations": rels,
    }


def kitchen_scene() -> Scene:
    return scene_from_dict(kitchen_dict())


def _room(name, objs, rels, floor=(4.0, 4.0), start=(0.5, 0.5)) -> dict:
    return {
        "name": name,
        "floor": {"min": [0.0, 0.0], "max": [float(floor[0]), float(floor[1])]},
        "start": [float(start[0]), float(start[1])],
        "objects": objs,
        "relations": rels,
    }


def fridge_variant(k: int) -> dict:
    """Variant k of the door-sweep suite: a fridge on the north wall of a small room.

    Width, opening angle, handle height, position and side clutter vary; the
    frontal 0.6 m standoff always falls inside the door's sweep.
    """
    rng = np.random.default_rng(np.random.SeedSequence([2024, k]))
    W, H = 4.0, 4.0
    width = float(rng.uniform(0.75, 0.95))
    depth = float(rng.uniform(0.7, 0.85))
    x0 = float(rng.uniform(1.0, 2.2))
    y_front = H - depth - 0.05
    angle = float(np.radians(rng.uniform(70.0, 90.0)))
    hz = float(rng.uniform(0.9, 1.1))
    objs = [fridge_object("fridge", x0, y_front, width, depth, 1.8, hz, angle)]
    rels = []
    x1 = x0 + width
    # counter west of the fridge, leaving the hinge side open
    if k % 3 != 2:
        cw = float(rng.uniform(0.5, 0.9))
        objs.append(box_object("counter", (max(x0 - 0.05 - cw, 0.05), H - 0.65, 0.0), (x0 - 0.05, H - 0.05, 0.9)))
        objs.append(box_object("kettle", (x0 - 0.35, H - 0.45, 0.9), (x0 - 0.2, H - 0.3, 1.1)))
        rels.append(_on("counter", "kettle"))
    if k % 2 == 0:
        objs.append(box_object("bin", (x1 + 0.4, H - 0.45, 0.0), (x1 + 0.75, H - 0.1, 0.6)))
    tx = float(rng.uniform(2.0, 3.0))
    objs.append(box_object("table", (tx, 0.6, 0.0), (tx + 0.8, 1.4, 0.75)))
    objs.append(box_object("cup", (tx + 0.3, 0.9, 0.75), (tx + 0.38, 0.98, 0.85)))
    rels.append(_on("table", "cup"))
    objs.append(box_object("milk", (x0 + 0.2, y_front + 0.2, 1.0), (x0 + 0.3, y_front + 0.3, 1.25)))
    rels.append(_inside("fridge", "milk"))
    return _room(f"fridge_{k:02d}", objs, rels, (W, H), (0.5, 0.5))


def open_table_variant(k: int) -> dict:
    """Variant k of the rigid suite: an apple near the edge of a free-standing table."""
    rng = np.random.default_rng(np.random.SeedSequence([2025, k]))
    W, H = 4.0, 4.0
    tw, td = float(rng.uniform(0.8, 1.4)), float(rng.uniform(0.6, 0.9))
    tx, ty = float(rng.uniform(1.2, W - 1.2 - tw)), float(rng.uniform(1.2, H - 1.2 - td))
    th = float(rng.uniform(0.7, 0.8))
    side = k % 4
    s = 0.08
    # apple 0.1-0.2 m in from one table edge
    inset = float(rng.uniform(0.1, 0.2))
    if side == 0:
        ax, ay = tx + tw / 2, ty + inset
    elif side == 1:
        ax, ay = tx + tw - inset, ty + td / 2
    elif side == 2:
        ax, ay = tx + tw / 2, ty + td - inset
    else:
        ax, ay = tx + inset, ty + td / 2
    objs = [
        box_object("table", (tx, ty, 0.0), (tx + tw, ty + td, th)),
        box_object("apple", (ax - s / 2, ay - s / 2, th), (ax + s / 2, ay + s / 2, th + s)),
        box_object("bowl", (tx + tw / 2 - 0.1, ty + td / 2 - 0.1, th), (tx + tw / 2 + 0.1, ty + td / 2 + 0.1, th + 0.08)),
        box_object("shelf", (W - 0.45, 0.2, 0.0), (W - 0.05, 1.2, 1.6)),
        box_object("plant", (0.1, H - 0.5, 0.0), (0.5, H - 0.1, 1.0)),
    ]
    rels = [_on("table", "apple"), _on("table", "bowl")]
    return _room(f"table_{k:02d}", objs, rels, (W, H), (0.5, 0.5))


def desk_scene(k: int) -> dict:
    """Random desk-scale scene k for the completeness check.

    A 3 x 3 m room with a desk, a few objects on it, a target and floor
    clutter.  Some scenes wall the desk in or push the target out of reach,
    so both outcomes occur.
    """
    rng = np.random.default_rng(np.random.SeedSequence([2026, k]))
    W = H = 3.0
    dw, dd, dh = float(rng.uniform(0.8, 1.3)), float(rng.uniform(0.5, 0.8)), float(rng.uniform(0.7, 0.8))
    dx, dy = float(rng.uniform(0.7, W - 0.7 - dw)), float(rng.uniform(0.7, H - 0.7 - dd))
    mode = ("open", "open", "open", "walled", "deep")[k % 5]
    if mode == "deep":
        dw, dd = 2.2, 1.9
        dx, dy = (W - dw) / 2, (H - dd) / 2
    objs = [box_object("desk", (dx, dy, 0.0), (dx + dw, dy + dd, dh))]
    rels = []
    if mode == "deep":
        tx, ty = dx + dw / 2, dy + dd / 2
    else:
        tx = float(rng.uniform(dx + 0.1, dx + dw - 0.1))
        ty = dy + float(rng.uniform(0.08, 0.2))
    s = 0.07
    objs.append(box_object("target", (tx - s / 2, ty - s / 2, dh), (tx + s / 2, ty + s / 2, dh + 0.1)))
    rels.append(_on("desk", "target"))
    n_items = int(rng.integers(2, 6))
    for i in range(n_items):
        ix = float(rng.uniform(dx + 0.05, dx + dw - 0.15))
        iy = float(rng.uniform(dy + 0.3, dy + dd - 0.1)) if dd > 0.45 else dy + dd / 2
        objs.append(box_object(f"item{i}", (ix, iy, dh), (ix + 0.1, iy + 0.1, dh + float(rng.uniform(0.05, 0.3)))))
        rels.append(_on("desk", f"item{i}"))
    n_floor = int(rng.integers(1, 4))
    for i in range(n_floor):
        fx = float(rng.uniform(0.1, W - 0.5))
        fy = float(rng.uniform(0.1, H - 0.5))
        lo, hi = (fx, fy, 0.0), (fx + 0.35, fy + 0.35, float(rng.uniform(0.3, 1.0)))
        # keep the start corner and the desk itself clear
        if fx < 0.9 and fy < 0.9:
            continue
        if fx + 0.35 > dx and fx < dx + dw and fy + 0.35 > dy and fy < dy + dd:
            continue
        objs.append(box_object(f"box{i}", lo, hi))
    if mode == "walled":
        g = 0.55
        x0, x1, y0, y1 = dx - g, dx + dw + g, dy - g, dy + dd + g
        t = 0.1
        objs = [o for o in objs if not o["id"].startswith("box")]
        objs += [
            box_object("wall_s", (x0 - t, y0 - t, 0.0), (x1 + t, y0, 1.2)),
            box_object("wall_n", (x0 - t, y1, 0.0), (x1 + t, y1 + t, 1.2)),
            box_object("wall_w", (x0 - t, y0, 0.0), (x0, y1, 1.2)),
            box_object("wall_e", (x1, y0, 0.0), (x1 + t, y1, 1.2)),
        ]
    return _room(f"desk_{k:02d}", objs, rels, (W, H), (0.35, 0.35))


def suite(name: str) -> list[Scene]:
    """Scenes of a named suite: ``fridge`` (25), ``table`` (25) or ``desk`` (20)."""
    makers = {"fridge": (fridge_variant, 25), "table": (open_table_variant, 25), "desk": (desk_scene, 20)}
    if name not in makers:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(makers)}")
    make, n = makers[name]
    return [scene_from_dict(make(k)) for k in range(n)]


def path_scene(n: int = 5, spacing: float = 1.0) -> Scene:
    """n equal boxes in a row, each related to the next: a path graph p0 - ... - p{n-1}."""
    s = 0.2
    objs = [box_object(f"p{i}", (0.5 + i * spacing, 1.0, 0.0), (0.5 + i * spacing + s, 1.0 + s, s)) for i in range(n)]
    rels = [_on(f"p{i}", f"p{i + 1}") for i in range(n - 1)]
    return scene_from_dict(_room("path", objs, rels, (1.0 + n * spacing, 2.0), (0.2, 0.2)))
