"""Compiled predicates over packed obstacle arrays.

Obstacles are packed as flat vertex arrays ``vx, vy`` with ``nxt``/``prv``
neighbour indices (counter-clockwise order), per-obstacle index ranges
``ostart``/``oend`` and bounding boxes ``bb`` (xmin, ymin, xmax, ymax).
Every function takes the distance tolerance ``eps`` explicitly.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ANG_TOL = 1e-10


@njit(cache=True)
def _inside_cone(wx, wy, ux, uy, nx, ny, dx, dy):
    # strict interior test of direction d at vertex w (prev u, next n), CCW polygon
    e1x, e1y = nx - wx, ny - wy
    e0x, e0y = ux - wx, uy - wy
    l1 = math.hypot(e1x, e1y)
    l0 = math.hypot(e0x, e0y)
    ld = math.hypot(dx, dy)
    if l1 == 0.0 or l0 == 0.0 or ld == 0.0:
        return False
    e1x /= l1
    e1y /= l1
    e0x /= l0
    e0y /= l0
    dx /= ld
    dy /= ld
    turn = (wx - ux) * (ny - wy) - (wy - uy) * (nx - wx)
    c1 = e1x * dy - e1y * dx
    c2 = dx * e0y - dy * e0x
    if turn >= 0.0:
        return c1 > ANG_TOL and c2 > ANG_TOL
    return c1 > ANG_TOL or c2 > ANG_TOL


@njit(cache=True)
def _pip_strict(px, py, vx, vy, nxt, s, e, eps):
    inside = False
    for i in range(s, e):
        j = nxt[i]
        ax, ay, bx, by = vx[i], vy[i], vx[j], vy[j]
        ex, ey = bx - ax, by - ay
        le2 = ex * ex + ey * ey
        t = ((px - ax) * ex + (py - ay) * ey) / le2 if le2 > 0.0 else 0.0
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        if math.hypot(ax + t * ex - px, ay + t * ey - py) <= eps:
            return False
        if (ay > py) != (by > py):
            xc = ax + (py - ay) * ex / ey
            if px < xc:
                inside = not inside
    return inside


@njit(cache=True)
def point_in_obstacles(px, py, vx, vy, nxt, ostart, oend, bb, eps):
    for k in range(ostart.shape[0]):
        if px < bb[k, 0] or px > bb[k, 2] or py < bb[k, 1] or py > bb[k, 3]:
            continue
        if _pip_strict(px, py, vx, vy, nxt, ostart[k], oend[k], eps):
            return True
    return False


@njit(cache=True)
def seg_blocked(px, py, qx, qy, vx, vy, nxt, prv, ostart, oend, bb, eps):
    """True iff the open segment pq meets the interior of some obstacle."""
    dx, dy = qx - px, qy - py
    length = math.hypot(dx, dy)
    if length <= eps:
        return False
    ux, uy = dx / length, dy / length
    sxmin, sxmax = min(px, qx), max(px, qx)
    symin, symax = min(py, qy), max(py, qy)
    for k in range(ostart.shape[0]):
        if (sxmax < bb[k, 0] - eps or sxmin > bb[k, 2] + eps
                or symax < bb[k, 1] - eps or symin > bb[k, 3] + eps):
            continue
        touched = False
        for i in range(ostart[k], oend[k]):
            j = nxt[i]
            ax, ay, bx, by = vx[i], vy[i], vx[j], vy[j]
            da = ux * (ay - py) - uy * (ax - px)
            db = ux * (by - py) - uy * (bx - px)
            ex, ey = bx - ax, by - ay
            le = math.hypot(ex, ey)
            dp = (ex * (py - ay) - ey * (px - ax)) / le
            dq = (ex * (qy - ay) - ey * (qx - ax)) / le
            if ((da > eps and db < -eps) or (da < -eps and db > eps)) and (
                    (dp > eps and dq < -eps) or (dp < -eps and dq > eps)):
                return True
            if abs(da) <= eps:
                t = ux * (ax - px) + uy * (ay - py)
                if -eps <= t <= length + eps:
                    touched = True
                    pi = prv[i]
                    if t < length - eps and _inside_cone(ax, ay, vx[pi], vy[pi], bx, by, ux, uy):
                        return True
                    if t > eps and _inside_cone(ax, ay, vx[pi], vy[pi], bx, by, -ux, -uy):
                        return True
            # segment endpoint resting on the interior of this edge
            if abs(dp) <= eps:
                sp = (ex * (px - ax) + ey * (py - ay)) / le
                if eps < sp < le - eps:
                    touched = True
                    if (ex * uy - ey * ux) / le > ANG_TOL:
                        return True
            if abs(dq) <= eps:
                sq = (ex * (qx - ax) + ey * (qy - ay)) / le
                if eps < sq < le - eps:
                    touched = True
                    if (ey * ux - ex * uy) / le > ANG_TOL:
                        return True
        if not touched and sxmin >= bb[k, 0] and sxmax <= bb[k, 2] and symin >= bb[k, 1] and symax <= bb[k, 3]:
            # no boundary contact: the segment is wholly inside or wholly outside
            if _pip_strict(0.5 * (px + qx), 0.5 * (py + qy), vx, vy, nxt, ostart[k], oend[k], eps):
                return True
    return False


@njit(cache=True)
def blocked_pairs(p, q, vx, vy, nxt, prv, ostart, oend, bb, eps):
    out = np.zeros(p.shape[0], dtype=np.bool_)
    for i in range(p.shape[0]):
        out[i] = seg_blocked(p[i, 0], p[i, 1], q[i, 0], q[i, 1], vx, vy, nxt, prv, ostart, oend, bb, eps)
    return out


@njit(cache=True)
def visibility_matrix(p, t, vx, vy, nxt, prv, ostart, oend, bb, eps):
    """vis[i, j] = segment p[i] -> t[j] is not blocked."""
    n, m = p.shape[0], t.shape[0]
    vis = np.zeros((n, m), dtype=np.bool_)
    for i in range(n):
        for j in range(m):
            vis[i, j] = not seg_blocked(p[i, 0], p[i, 1], t[j, 0], t[j, 1], vx, vy, nxt, prv, ostart, oend, bb, eps)
    return vis


@njit(cache=True)
def _geo_sum(qx, qy, apts, dist_to_vertex, first, firstd, vx, vy, nxt, prv, ostart, oend, bb, eps):
    nv = vx.shape[0]
    nfirst = 0
    for w in range(nv):
        wx, wy = vx[w], vy[w]
        dw = math.hypot(wx - qx, wy - qy)
        if dw > eps:
            u, n = prv[w], nxt[w]
            o1 = ((wx - qx) * (vy[u] - qy) - (wy - qy) * (vx[u] - qx)) / dw
            o2 = ((wx - qx) * (vy[n] - qy) - (wy - qy) * (vx[n] - qx)) / dw
            if (o1 > eps and o2 < -eps) or (o1 < -eps and o2 > eps):
                continue
            if seg_blocked(qx, qy, wx, wy, vx, vy, nxt, prv, ostart, oend, bb, eps):
                continue
        first[nfirst] = w
        firstd[nfirst] = dw
        nfirst += 1
    total = 0.0
    for ia in range(apts.shape[0]):
        ax, ay = apts[ia, 0], apts[ia, 1]
        if not seg_blocked(qx, qy, ax, ay, vx, vy, nxt, prv, ostart, oend, bb, eps):
            total += math.hypot(ax - qx, ay - qy)
            continue
        best = np.inf
        for f in range(nfirst):
            c = firstd[f] + dist_to_vertex[ia, first[f]]
            if c < best:
                best = c
        total += best
    return total


@njit(cache=True)
def geodesic_sums(qpts, apts, dist_to_vertex, vx, vy, nxt, prv, ostart, oend, bb, eps):
    """Sum over attached points of the geodesic distance from each query point.

    ``dist_to_vertex[k, v]`` is the geodesic distance from attached point k
    to obstacle vertex v. Only vertices tangent as seen from the query point
    are considered as the first bend, which leaves shortest lengths intact.
    """
    nq, nv = qpts.shape[0], vx.shape[0]
    out = np.empty(nq)
    first = np.empty(nv, dtype=np.int64)
    firstd = np.empty(nv)
    for iq in range(nq):
        out[iq] = _geo_sum(qpts[iq, 0], qpts[iq, 1], apts, dist_to_vertex, first, firstd,
                           vx, vy, nxt, prv, ostart, oend, bb, eps)
    return out


@njit(cache=True)
def compass_search(tri, r1, r2, f0, step, step_min, max_polls, move_tol, apts, dist_to_vertex,
                   vx, vy, nxt, prv, ostart, oend, bb, eps):
    """Pattern search over (r1, r2) in [0, 1]^2 for one triangle.

    Polls the four axis directions, moves to the best strict improvement,
    otherwise halves the step. Returns (r1, r2, value).
    """
    nv = vx.shape[0]
    first = np.empty(nv, dtype=np.int64)
    firstd = np.empty(nv)
    dr1 = (1.0, -1.0, 0.0, 0.0)
    dr2 = (0.0, 0.0, 1.0, -1.0)
    fr = f0
    polls = 0
    while step >= step_min and polls < max_polls:
        polls += 1
        best_k = -1
        best_v = np.inf
        best_a = 0.0
        best_b = 0.0
        for k in range(4):
            a = min(max(r1 + step * dr1[k], 0.0), 1.0)
            b = min(max(r2 + step * dr2[k], 0.0), 1.0)
            s = math.sqrt(a)
            wa, wb, wc = 1.0 - s, s * (1.0 - b), s * b
            qx = wa * tri[0, 0] + wb * tri[1, 0] + wc * tri[2, 0]
            qy = wa * tri[0, 1] + wb * tri[1, 1] + wc * tri[2, 1]
            v = _geo_sum(qx, qy, apts, dist_to_vertex, first, firstd, vx, vy, nxt, prv, ostart, oend, bb, eps)
            if v < best_v:
                best_k, best_v, best_a, best_b = k, v, a, b
        if best_k >= 0 and best_v < fr - move_tol * abs(fr):
            r1, r2, fr = best_a, best_b, best_v
        else:
            step *= 0.5
    return r1, r2, fr
