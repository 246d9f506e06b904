"""Planar primitives: polygons, maps, predicates, hulls, free-space triangulation."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon as ShapelyPolygon

from obsteiner import _kernels
from obsteiner.errors import ValidationError

Point2 = tuple[float, float]

GEO_REL_TOL = 1e-9


def as_point(p: Iterable[float]) -> Point2:
    x, y = (float(v) for v in p)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValidationError(f"non-finite point ({x}, {y})")
    return (x, y)


def dist(p: Point2, q: Point2) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])


def signed_area(pts: Sequence[Point2]) -> float:
    a = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


def _segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool:
    """Closed-segment intersection test (touching counts)."""

    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return (v > 0) - (v < 0)

    def on_seg(p, q, r):
        return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])

    o1, o2, o3, o4 = orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and on_seg(a, b, c))
        or (o2 == 0 and on_seg(a, b, d))
        or (o3 == 0 and on_seg(c, d, a))
        or (o4 == 0 and on_seg(c, d, b))
    )


@dataclass(frozen=True)
class Polygon:
    """Simple polygon, stored counter-clockwise.

    Clockwise input is reversed on construction; self-intersecting or
    degenerate input raises :class:`ValidationError`.
    """

    vertices: tuple[Point2, ...]

    def __post_init__(self) -> None:
        verts = tuple(as_point(v) for v in self.vertices)
        if len(verts) < 3:
            raise ValidationError("polygon needs at least 3 vertices")
        n = len(verts)
        for i in range(n):
            if verts[i] == verts[(i + 1) % n]:
                raise ValidationError(f"polygon has repeated consecutive vertex {verts[i]}")
        area = signed_area(verts)
        if area == 0.0:
            raise ValidationError("polygon has zero area")
        if area < 0:
            verts = verts[::-1]
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                c, d = verts[j], verts[(j + 1) % n]
                if _segments_cross(a, b, c, d):
                    raise ValidationError("polygon is not simple")
        object.__setattr__(self, "vertices", verts)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    def edges(self) -> list[tuple[Point2, Point2]]:
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def to_shapely(self) -> ShapelyPolygon:
        return ShapelyPolygon(self.vertices)


@dataclass(frozen=True)
class ObstacleArrays:
    vx: np.ndarray
    vy: np.ndarray
    nxt: np.ndarray
    prv: np.ndarray
    ostart: np.ndarray
    oend: np.ndarray
    bb: np.ndarray
    eps: float

    @property
    def args(self) -> tuple:
        return (self.vx, self.vy, self.nxt, self.prv, self.ostart, self.oend, self.bb, self.eps)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.vx, self.vy])


@dataclass(frozen=True)
class MapEnv:
    """Square world ``[0, side]^2`` with polygonal obstacles."""

    side: float
    obstacles: tuple[Polygon, ...] = ()

    def __post_init__(self) -> None:
        side = float(self.side)
        if not (math.isfinite(side) and side > 0):
            raise ValidationError(f"map side must be positive, got {self.side}")
        obstacles = tuple(o if isinstance(o, Polygon) else Polygon(tuple(o)) for o in self.obstacles)
        object.__setattr__(self, "side", side)
        object.__setattr__(self, "obstacles", obstacles)
        for k, o in enumerate(obstacles):
            for x, y in o.vertices:
                if not (0.0 < x < side and 0.0 < y < side):
                    raise ValidationError(f"obstacle {k} is not strictly inside bounds")
        shp = [o.to_shapely() for o in obstacles]
        for i in range(len(shp)):
            for j in range(i + 1, len(shp)):
                if shp[i].intersects(shp[j]) and not shp[i].touches(shp[j]):
                    raise ValidationError(f"obstacles {i} and {j} overlap")

    @property
    def eps(self) -> float:
        return GEO_REL_TOL * self.side

    @property
    def corners(self) -> tuple[Point2, ...]:
        s = self.side
        return ((0.0, 0.0), (s, 0.0), (s, s), (0.0, s))

    @cached_property
    def map_id(self) -> str:
        h = hashlib.sha256(repr((self.side, [o.vertices for o in self.obstacles])).encode())
        return h.hexdigest()[:16]

    @cached_property
    def packed(self) -> ObstacleArrays:
        vx, vy, nxt, prv, ostart, oend, bb = [], [], [], [], [], [], []
        base = 0
        for o in self.obstacles:
            n = len(o.vertices)
            ostart.append(base)
            oend.append(base + n)
            for i, (x, y) in enumerate(o.vertices):
                vx.append(x)
                vy.append(y)
                nxt.append(base + (i + 1) % n)
                prv.append(base + (i - 1) % n)
            xs = [v[0] for v in o.vertices]
            ys = [v[1] for v in o.vertices]
            bb.append((min(xs), min(ys), max(xs), max(ys)))
            base += n
        return ObstacleArrays(
            vx=np.asarray(vx, dtype=np.float64),
            vy=np.asarray(vy, dtype=np.float64),
            nxt=np.asarray(nxt, dtype=np.int64),
            prv=np.asarray(prv, dtype=np.int64),
            ostart=np.asarray(ostart, dtype=np.int64),
            oend=np.asarray(oend, dtype=np.int64),
            bb=np.asarray(bb, dtype=np.float64).reshape(-1, 4),
            eps=self.eps,
        )

    def obstacle_vertices(self) -> list[Point2]:
        return [v for o in self.obstacles for v in o.vertices]

    def in_bounds(self, p: Point2) -> bool:
        e = self.eps
        return -e <= p[0] <= self.side + e and -e <= p[1] <= self.side + e

    def is_free(self, p: Point2) -> bool:
        """Inside bounds and not strictly inside any obstacle."""
        if not self.in_bounds(p):
            return False
        a = self.packed
        return not _kernels.point_in_obstacles(p[0], p[1], a.vx, a.vy, a.nxt, a.ostart, a.oend, a.bb, a.eps)


def point_in_polygon(p: Point2, poly: Polygon, eps: float | None = None) -> bool:
    """Strict interior test; points within ``eps`` of the boundary are outside."""
    if not isinstance(poly, Polygon):
        poly = Polygon(tuple(poly))
    if eps is None:
        xs = [v[0] for v in poly.vertices]
        ys = [v[1] for v in poly.vertices]
        eps = GEO_REL_TOL * max(max(xs) - min(xs), max(ys) - min(ys))
    n = len(poly.vertices)
    vx = np.array([v[0] for v in poly.vertices])
    vy = np.array([v[1] for v in poly.vertices])
    nxt = (np.arange(n, dtype=np.int64) + 1) % n
    return bool(_kernels._pip_strict(float(p[0]), float(p[1]), vx, vy, nxt, 0, n, eps))


def segment_blocked(p: Point2, q: Point2, env: MapEnv) -> bool:
    """True iff the open segment pq crosses some obstacle interior.

    Touching a vertex or sliding along an edge is not blocking.
    """
    a = env.packed
    return bool(_kernels.seg_blocked(float(p[0]), float(p[1]), float(q[0]), float(q[1]), *a.args))


def segments_blocked(p: np.ndarray, q: np.ndarray, env: MapEnv) -> np.ndarray:
    a = env.packed
    return _kernels.blocked_pairs(
        np.ascontiguousarray(p, dtype=np.float64), np.ascontiguousarray(q, dtype=np.float64), *a.args
    )


def visibility_matrix(p: np.ndarray, t: np.ndarray, env: MapEnv) -> np.ndarray:
    a = env.packed
    p = np.ascontiguousarray(np.reshape(p, (-1, 2)), dtype=np.float64)
    t = np.ascontiguousarray(np.reshape(t, (-1, 2)), dtype=np.float64)
    return _kernels.visibility_matrix(p, t, *a.args)


@dataclass(frozen=True)
class Hull:
    """Convex hull, counter-clockwise. ``degenerate`` when fewer than 3 vertices."""

    vertices: tuple[Point2, ...]

    @property
    def degenerate(self) -> bool:
        return len(self.vertices) < 3

    def region(self, eps: float) -> Polygon:
        """2D search region; degenerate hulls are inflated by ``eps``."""
        if not self.degenerate:
            return Polygon(self.vertices)
        if len(self.vertices) == 1:
            x, y = self.vertices[0]
            return Polygon(((x - eps, y - eps), (x + eps, y - eps), (x + eps, y + eps), (x - eps, y + eps)))
        (x0, y0), (x1, y1) = self.vertices
        length = math.hypot(x1 - x0, y1 - y0)
        nx, ny = -(y1 - y0) / length * eps, (x1 - x0) / length * eps
        return Polygon(((x0 - nx, y0 - ny), (x1 - nx, y1 - ny), (x1 + nx, y1 + ny), (x0 + nx, y0 + ny)))


def convex_hull(pts: Iterable[Point2]) -> Hull:
    """Andrew's monotone chain; collinear points on hull edges are dropped."""
    uniq = sorted(set(as_point(p) for p in pts))
    if not uniq:
        raise ValidationError("convex hull of empty point set")
    if len(uniq) <= 2:
        return Hull(tuple(uniq))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[Point2] = []
    for p in uniq:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point2] = []
    for p in reversed(uniq):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return Hull((uniq[0], uniq[-1]))
    return Hull(tuple(hull))


@dataclass(frozen=True)
class Triangle:
    index: int
    a: Point2
    b: Point2
    c: Point2

    @property
    def area(self) -> float:
        return 0.5 * abs(
            (self.b[0] - self.a[0]) * (self.c[1] - self.a[1]) - (self.b[1] - self.a[1]) * (self.c[0] - self.a[0])
        )

    @property
    def centroid(self) -> Point2:
        return ((self.a[0] + self.b[0] + self.c[0]) / 3.0, (self.a[1] + self.b[1] + self.c[1]) / 3.0)


@dataclass(frozen=True)
class FreeSpaceTriangulation:
    triangles: tuple[Triangle, ...]
    map_id: str
    verts: np.ndarray = field(repr=False, compare=False)  # (T, 3, 2) float64

    def __len__(self) -> int:
        return len(self.triangles)

    @property
    def total_area(self) -> float:
        return sum(t.area for t in self.triangles)


def triangulate_free_space(env: MapEnv) -> FreeSpaceTriangulation:
    """Constrained Delaunay triangulation of bounds minus obstacles."""
    s = env.side
    shell = [(0.0, 0.0), (s, 0.0), (s, s), (0.0, s)]
    domain = ShapelyPolygon(shell, [list(o.vertices) for o in env.obstacles])
    if not domain.is_valid:
        raise ValidationError("obstacles overlap or touch the bounds")
    pieces = shapely.constrained_delaunay_triangles(domain)
    min_area = (env.eps * s) * 1e-3
    tris: list[Triangle] = []
    for g in pieces.geoms:
        a, b, c = (tuple(map(float, v)) for v in list(g.exterior.coords)[:3])
        cand = Triangle(len(tris), a, b, c)
        if cand.area <= min_area:
            continue
        cen = cand.centroid
        if any(point_in_polygon(cen, o, env.eps) for o in env.obstacles):
            continue
        tris.append(cand)
    verts = np.array([[t.a, t.b, t.c] for t in tris], dtype=np.float64).reshape(-1, 3, 2)
    return FreeSpaceTriangulation(tuple(tris), env.map_id, verts)


@dataclass(frozen=True)
class BarycentricCoord:
    tau: int
    r1: float
    r2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.r1 <= 1.0 and 0.0 <= self.r2 <= 1.0):
            raise ValidationError(f"barycentric parameters out of [0,1]: ({self.r1}, {self.r2})")


def barycentric_weights(r1, r2):
    """Coefficients of (a, b, c) for the square-root triangle parameterisation.

    The first weight is ``1 - sqrt(r1)`` so the three sum to one and every
    (r1, r2) in the unit square lands in the closed triangle.
    """
    s = np.sqrt(r1)
    return 1.0 - s, s * (1.0 - r2), s * r2


def barycentric_to_cartesian(r: BarycentricCoord, tri: FreeSpaceTriangulation) -> Point2:
    if not 0 <= r.tau < len(tri):
        raise ValidationError(f"triangle index {r.tau} out of range 0..{len(tri) - 1}")
    wa, wb, wc = barycentric_weights(r.r1, r.r2)
    a, b, c = tri.verts[r.tau]
    p = wa * a + wb * b + wc * c
    return (float(p[0]), float(p[1]))


def cartesian_to_barycentric(p: Point2, tau: int, tri: FreeSpaceTriangulation) -> BarycentricCoord:
    """Inverse of :func:`barycentric_to_cartesian`, clamped into [0,1]^2."""
    a, b, c = tri.verts[tau]
    m = np.array([[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]])
    lb, lc = np.linalg.solve(m, np.asarray(p) - a)
    lb, lc = max(lb, 0.0), max(lc, 0.0)
    r1 = min((lb + lc) ** 2, 1.0)
    r2 = lc / (lb + lc) if lb + lc > 0 else 0.0
    return BarycentricCoord(tau, float(r1), float(min(max(r2, 0.0), 1.0)))


def point_in_triangle(p: Point2, a: Point2, b: Point2, c: Point2, eps: float = 0.0) -> bool:
    """Closed test with distance tolerance ``eps``."""

    def side(u, v):
        ex, ey = v[0] - u[0], v[1] - u[1]
        return (ex * (p[1] - u[1]) - ey * (p[0] - u[0])) / math.hypot(ex, ey)

    s1, s2, s3 = side(a, b), side(b, c), side(c, a)
    return (s1 >= -eps and s2 >= -eps and s3 >= -eps) or (s1 <= eps and s2 <= eps and s3 <= eps)


def convex_polygons_intersect(p: np.ndarray, q: np.ndarray, eps: float = 0.0) -> bool:
    """Separating-axis test for two convex polygons given as (n, 2) arrays."""
    for poly in (p, q):
        n = len(poly)
        for i in range(n):
            e = poly[(i + 1) % n] - poly[i]
            axis = np.array([-e[1], e[0]])
            norm = math.hypot(*axis)
            if norm == 0.0:
                continue
            axis /= norm
            pa, qa = p @ axis, q @ axis
            if pa.max() < qa.min() - eps or qa.max() < pa.min() - eps:
                return False
    return True


def point_triangle_distances(pts: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point (K, 2) to each triangle (T, 3, 2) -> (K, T)."""
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    a, b, c = verts[:, 0], verts[:, 1], verts[:, 2]
    P = pts[:, None, :]
    inside = np.ones((pts.shape[0], verts.shape[0]), dtype=bool)
    area = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    sign = np.sign(area)
    best = np.full(inside.shape, np.inf)
    for u, v in ((a, b), (b, c), (c, a)):
        e = v - u
        w = P - u
        cr = (e[:, 0] * w[..., 1] - e[:, 1] * w[..., 0]) * sign
        inside &= cr >= 0
        t = np.clip((w * e).sum(-1) / np.maximum((e * e).sum(-1), 1e-300), 0.0, 1.0)
        d = np.hypot(w[..., 0] - t * e[:, 0], w[..., 1] - t * e[:, 1])
        best = np.minimum(best, d)
    return np.where(inside, 0.0, best)
