"""Independent reference implementations used as test oracles.

Each one is deliberately naive: plain loops, no shared code with the
library beyond data types.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np


def dh_matrix(a, alpha, d, theta):
    ct, st, ca, sa = math.cos(theta), math.sin(theta), math.cos(alpha), math.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def naive_fk(dh_rows, q):
    T = np.eye(4)
    for (a, alpha, d, off), qi in zip(dh_rows, q):
        T = T @ dh_matrix(a, alpha, d, qi + off)
    return T[:3, 3], T[:3, :3]


def segment_hits_box_sampled(p, q, lo, hi, step=1e-3):
    """Dense point sampling along p->q; hit if any sample lies in the closed box."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    n = max(int(math.ceil(np.linalg.norm(q - p) / step)), 1)
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    pts = p + t * (q - p)
    return bool(np.any(np.all((pts >= lo) & (pts <= hi), axis=1)))


def open_path_cost(order, c0, C):
    cost = c0[order[0]]
    for i, j in zip(order[:-1], order[1:]):
        cost += C[i, j]
    return cost


def brute_force_open_tsp(c0, C):
    n = len(c0)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        best = min(best, open_path_cost(perm, c0, C))
    return best


def bfs_path_length(cells, start, goal, res):
    """Dijkstra on the same 8-connectivity without corner cutting."""
    import heapq

    ny, nx = cells.shape
    dist = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        d, (x, y) = heapq.heappop(heap)
        if (x, y) == goal:
            return d * res
        if d > dist[(x, y)]:
            continue
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == dy == 0:
                    continue
                jx, jy = x + dx, y + dy
                if not (0 <= jx < nx and 0 <= jy < ny) or cells[jy, jx]:
                    continue
                if dx and dy and (cells[y, jx] or cells[jy, x]):
                    continue
                nd = d + math.hypot(dx, dy)
                if nd < dist.get((jx, jy), math.inf) - 1e-12:
                    dist[(jx, jy)] = nd
                    heapq.heappush(heap, (nd, (jx, jy)))
    return None


def flood_reachable(cells, start):
    ny, nx = cells.shape
    seen = {start}
    dq = deque([start])
    while dq:
        x, y = dq.popleft()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            j = (x + dx, y + dy)
            if 0 <= j[0] < nx and 0 <= j[1] < ny and not cells[j[1], j[0]] and j not in seen:
                seen.add(j)
                dq.append(j)
    return seen


def rect_overlap(alo, ahi, blo, bhi):
    return all(alo[k] <= bhi[k] and blo[k] <= ahi[k] for k in range(len(alo)))


def in_annulus(p, r_in, r_out, tol=0.0):
    r = math.hypot(p[0], p[1])
    return abs(p[2]) <= tol and r_in - tol <= r <= r_out + tol


def sgns_grad_mp(u, vp, vn, dps=50, h=1e-20):
    """Central differences of the negative-sampling loss at ``dps`` digits.

    Returns float64 arrays (du, dvp, dvn); exact to double precision.
    """
    import mpmath

    u, vp, vn = (np.array(a, dtype=object) for a in (u, vp, vn))
    out = []
    with mpmath.workdps(dps):
        H = mpmath.mpf(h)
        for arr in (u, vp, vn):
            g = np.zeros(arr.shape)
            flat, gf = arr.reshape(-1), g.reshape(-1)
            for i in range(flat.size):
                old = flat[i]
                flat[i] = mpmath.mpf(old) + H
                lp = _loss_obj(u, vp, vn)
                flat[i] = mpmath.mpf(old) - H
                lm = _loss_obj(u, vp, vn)
                flat[i] = old
                gf[i] = float((lp - lm) / (2 * H))
            out.append(g)
    return out


def _loss_obj(u, vp, vn):
    import mpmath

    dot = lambda a, b: mpmath.fsum(mpmath.mpf(x) * mpmath.mpf(y) for x, y in zip(a, b))  # noqa: E731
    loss = mpmath.log1p(mpmath.exp(-dot(u, vp)))
    for row in vn:
        loss += mpmath.log1p(mpmath.exp(dot(u, row)))
    return loss
