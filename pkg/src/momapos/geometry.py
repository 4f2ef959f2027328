"""Axis-aligned boxes, rotations and segment tests."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box; works for 2D footprints and 3D volumes alike."""

    min: tuple
    max: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.min)
        hi = tuple(float(v) for v in self.max)
        if len(lo) != len(hi):
            raise ValueError("min/max dimension mismatch")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def from_points(cls, pts) -> "Aabb":
        pts = np.asarray(pts, dtype=float)
        return cls(tuple(pts.min(axis=0)), tuple(pts.max(axis=0)))

    @classmethod
    def from_center(cls, center, size) -> "Aabb":
        c = np.asarray(center, dtype=float)
        h = np.asarray(size, dtype=float) / 2.0
        return cls(tuple(c - h), tuple(c + h))

    @property
    def dim(self) -> int:
        return len(self.min)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.min)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.max)

    def is_valid(self) -> bool:
        return all(a <= b for a, b in zip(self.min, self.max))

    def size(self) -> np.ndarray:
        return self.hi - self.lo

    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    def volume(self) -> float:
        return float(np.prod(np.maximum(self.size(), 0.0)))

    def corners(self) -> np.ndarray:
        return np.array(list(product(*zip(self.min, self.max))), dtype=float)

    def footprint(self) -> "Aabb":
        return Aabb(self.min[:2], self.max[:2])

    def inflate(self, margin: float) -> "Aabb":
        return Aabb(tuple(self.lo - margin), tuple(self.hi + margin))

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(tuple(np.minimum(self.lo, other.lo)), tuple(np.maximum(self.hi, other.hi)))

    def contains_point(self, p, tol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)[: self.dim]
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def contains_points(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)[..., : self.dim]
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    def overlaps(self, other: "Aabb") -> bool:
        """Closed-interval overlap test over the shared leading axes."""
        k = min(self.dim, other.dim)
        return all(self.min[i] <= other.max[i] and other.min[i] <= self.max[i] for i in range(k))

    def to_dict(self) -> dict:
        return {"min": list(self.min), "max": list(self.max)}


def boxes_to_arrays(boxes) -> tuple[np.ndarray, np.ndarray]:
    if not boxes:
        return np.zeros((0, 3)), np.zeros((0, 3))
    lo = np.array([b.min for b in boxes], dtype=float)
    hi = np.array([b.max for b in boxes], dtype=float)
    return lo, hi


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis (right-hand rule)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rotate_points(points, pivot, axis, angle: float) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    pivot = np.asarray(pivot, dtype=float)
    R = rotation_matrix(axis, angle)
    return (pts - pivot) @ R.T + pivot


def arc_aabb(points, pivot, axis, theta0: float, theta1: float) -> Aabb:
    """Exact AABB of ``points`` rotated about (pivot, axis) over [theta0, theta1].

    Every coordinate of a rotated point is c + A cos(t) + B sin(t), so the
    extremes over the interval sit at the endpoints or at atan2(B, A) (+pi).
    """
    if theta1 < theta0:
        theta0, theta1 = theta1, theta0
    pts = np.asarray(points, dtype=float) - np.asarray(pivot, dtype=float)
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    par = np.outer(pts @ k, k)
    perp = pts - par
    cross = np.cross(k, pts)
    thetas = [theta0, theta1]
    for A, B in zip(perp.reshape(-1), cross.reshape(-1)):
        if abs(A) < 1e-15 and abs(B) < 1e-15:
            continue
        base = np.arctan2(B, A)
        for t in (base, base + np.pi):
            # shift the critical angle into the interval if any 2*pi copy lands there
            n = np.ceil((theta0 - t) / (2 * np.pi))
            t = t + n * 2 * np.pi
            if theta0 <= t <= theta1:
                thetas.append(float(t))
    thetas = np.unique(np.array(thetas))
    c, s = np.cos(thetas), np.sin(thetas)
    # (n_theta, n_pts, 3)
    rotated = par[None] + c[:, None, None] * perp[None] + s[:, None, None] * cross[None]
    rotated = rotated.reshape(-1, 3) + np.asarray(pivot, dtype=float)
    return Aabb.from_points(rotated)


@dataclass(frozen=True)
class RotatedBox:
    """A box given at rest (``home``) and rotated about (pivot, axis) by ``angle``."""

    home: Aabb
    pivot: tuple
    axis: tuple
    angle: float

    def contains_points(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        local = rotate_points(pts.reshape(-1, 3), self.pivot, self.axis, -self.angle)
        return self.home.contains_points(local).reshape(pts.shape[:-1])

    def corners(self) -> np.ndarray:
        return rotate_points(self.home.corners(), self.pivot, self.axis, self.angle)

    def aabb(self) -> Aabb:
        return Aabb.from_points(self.corners())


def segment_hits_aabb(p, q, box: Aabb, eps: float = 1e-12) -> bool:
    """Slab test for the closed segment p->q against a closed box."""
    p = np.asarray(p, dtype=float)[: box.dim]
    q = np.asarray(q, dtype=float)[: box.dim]
    d = q - p
    t0, t1 = 0.0, 1.0
    for k in range(box.dim):
        if abs(d[k]) < eps:
            if p[k] < box.min[k] or p[k] > box.max[k]:
                return False
            continue
        ta = (box.min[k] - p[k]) / d[k]
        tb = (box.max[k] - p[k]) / d[k]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True


def segments_hit_boxes(P, Q, lo, hi, eps: float = 1e-12) -> np.ndarray:
    """Vectorised slab test: bool matrix (n_segments, n_boxes)."""
    P = np.asarray(P, dtype=float)[:, None, :]
    Q = np.asarray(Q, dtype=float)[:, None, :]
    lo = np.asarray(lo, dtype=float)[None]
    hi = np.asarray(hi, dtype=float)[None]
    d = Q - P
    flat = np.abs(d) < eps
    safe = np.where(flat, 1.0, d)
    ta = (lo - P) / safe
    tb = (hi - P) / safe
    tmin = np.where(flat, -np.inf, np.minimum(ta, tb))
    tmax = np.where(flat, np.inf, np.maximum(ta, tb))
    outside = flat & ((P < lo) | (P > hi))
    t0 = np.maximum(tmin.max(axis=-1), 0.0)
    t1 = np.minimum(tmax.min(axis=-1), 1.0)
    return (t0 <= t1) & ~outside.any(axis=-1)


def rect_overlaps_rects(lo, hi, rlo, rhi) -> np.ndarray:
    """Closed 2D overlap of many query rectangles against many obstacle rectangles.

    Returns a bool vector over queries: True if the query overlaps any obstacle.
    """
    lo = np.asarray(lo, dtype=float)[:, None, :2]
    hi = np.asarray(hi, dtype=float)[:, None, :2]
    rlo = np.asarray(rlo, dtype=float)[None, :, :2]
    rhi = np.asarray(rhi, dtype=float)[None, :, :2]
    if rlo.shape[1] == 0:
        return np.zeros(lo.shape[0], dtype=bool)
    hit = np.all((lo <= rhi) & (rlo <= hi), axis=-1)
    return hit.any(axis=1)


def wrap_angle(a: float) -> float:
    """Map an angle into (-pi, pi]."""
    a = float(np.arctan2(np.sin(a), np.cos(a)))
    if a <= -np.pi:
        a = np.pi
    return a
