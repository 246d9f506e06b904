"""Visibility graphs, A* geodesics and arclength resampling."""

from __future__ import annotations

import heapq
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from obsteiner import _kernels
from obsteiner.errors import NoPathError, ValidationError
from obsteiner.geometry import MapEnv, Point2, as_point, dist, visibility_matrix

TIE_TOL = 1e-12


@dataclass(frozen=True)
class GeodesicPath:
    waypoints: tuple[Point2, ...]
    length: float = field(init=False)

    def __post_init__(self) -> None:
        wps = tuple(as_point(p) for p in self.waypoints)
        if not wps:
            raise ValidationError("geodesic path needs at least one waypoint")
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "length", sum(dist(wps[i], wps[i + 1]) for i in range(len(wps) - 1)))

    @property
    def source(self) -> Point2:
        return self.waypoints[0]

    @property
    def target(self) -> Point2:
        return self.waypoints[-1]

    def reversed(self) -> GeodesicPath:
        return GeodesicPath(self.waypoints[::-1])


@dataclass
class VisibilityGraph:
    vertices: list[Point2]
    kinds: list[str]  # "obstacle" | "corner" | "extra"
    adjacency: list[list[tuple[int, float]]]
    map_id: str

    def __post_init__(self) -> None:
        self._index = {p: i for i, p in enumerate(self.vertices)}

    def index(self, p: Point2) -> int:
        try:
            return self._index[as_point(p)]
        except KeyError:
            raise ValidationError(f"{p} is not a vertex of the visibility graph") from None

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2


def build_visibility_graph(env: MapEnv, extra: Iterable[Point2] = ()) -> VisibilityGraph:
    """All obstacle vertices, bounds corners and ``extra`` points, joined where mutually visible."""
    extra = [as_point(p) for p in extra]
    for p in extra:
        if not env.is_free(p):
            raise ValidationError(f"query point {p} is not in free space")
    verts: list[Point2] = []
    kinds: list[str] = []
    seen: set[Point2] = set()
    for kind, pts in (("obstacle", env.obstacle_vertices()), ("corner", env.corners), ("extra", extra)):
        for p in pts:
            if p in seen:
                continue
            seen.add(p)
            verts.append(p)
            kinds.append(kind)
    arr = np.array(verts, dtype=np.float64).reshape(-1, 2)
    vis = visibility_matrix(arr, arr, env)
    adjacency: list[list[tuple[int, float]]] = [[] for _ in verts]
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            if vis[i, j]:
                w = dist(verts[i], verts[j])
                adjacency[i].append((j, w))
                adjacency[j].append((i, w))
    return VisibilityGraph(verts, kinds, adjacency, env.map_id)


def _astar(
    coords: Sequence[Point2],
    neighbors: Callable[[int], Iterable[tuple[int, float]]],
    src: int,
    dst: int,
) -> list[int]:
    """A* with straight-line heuristic; equal-cost labels keep the lexicographically smaller path."""
    goal = coords[dst]
    g = {src: 0.0}
    seq = {src: (coords[src],)}
    pred = {src: -1}
    heap = [(dist(coords[src], goal), seq[src], src)]
    closed: set[int] = set()
    while heap:
        _, _, u = heapq.heappop(heap)
        if u in closed:
            continue
        if u == dst:
            out = []
            while u != -1:
                out.append(u)
                u = pred[u]
            return out[::-1]
        closed.add(u)
        for v, w in neighbors(u):
            if v in closed:
                continue
            cand = g[u] + w
            old = g.get(v)
            if old is not None:
                if cand > old + TIE_TOL * max(old, 1.0):
                    continue
                if abs(cand - old) <= TIE_TOL * max(old, 1.0) and seq[u] + (coords[v],) >= seq[v]:
                    continue
            g[v] = cand
            pred[v] = u
            seq[v] = seq[u] + (coords[v],)
            heapq.heappush(heap, (cand + dist(coords[v], goal), seq[v], v))
    raise NoPathError(f"no obstacle-free path from {coords[src]} to {coords[dst]}")


def shortest_path(g: VisibilityGraph, src: Point2, dst: Point2) -> GeodesicPath:
    """Shortest obstacle-avoiding polyline between two graph vertices.

    Registered extra points are only used as the endpoints, never as bends.
    """
    s, t = g.index(src), g.index(dst)
    if s == t:
        return GeodesicPath((g.vertices[s],))

    def neighbors(u: int):
        for v, w in g.adjacency[u]:
            if g.kinds[v] != "extra" or v == t:
                yield v, w

    order = _astar(g.vertices, neighbors, s, t)
    return GeodesicPath(tuple(g.vertices[i] for i in order))


def resample_path(p: GeodesicPath, n_points: int) -> np.ndarray:
    """``n_points`` points at equal arclength spacing along the path, endpoints included."""
    if n_points < 2:
        raise ValidationError(f"need at least 2 resampling points, got {n_points}")
    wps = np.asarray(p.waypoints, dtype=np.float64)
    if len(wps) == 1 or p.length == 0.0:
        return np.repeat(wps[:1], n_points, axis=0)
    seg = np.hypot(*np.diff(wps, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.linspace(0.0, cum[-1], n_points)
    out = np.column_stack([np.interp(s, cum, wps[:, 0]), np.interp(s, cum, wps[:, 1])])
    out[0], out[-1] = wps[0], wps[-1]
    return out


class GeodesicRouter:
    """Geodesic queries between arbitrary free points of one map.

    Obstacle vertices form the static graph; all-pairs distances among them
    are precomputed so the optimizer can sum geodesic distances in bulk.
    Polylines come from A* and are cached per unordered endpoint pair.
    """

    def __init__(self, env: MapEnv):
        self.env = env
        self._arrays = env.packed
        self.base = self._arrays.points
        nv = len(self.base)
        vis = visibility_matrix(self.base, self.base, env) if nv else np.zeros((0, 0), dtype=bool)
        np.fill_diagonal(vis, False)
        diff = self.base[:, None, :] - self.base[None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
        self._adj = [[(int(j), float(d[i, j])) for j in np.flatnonzero(vis[i])] for i in range(nv)]
        apsp = np.where(vis, d, np.inf)
        np.fill_diagonal(apsp, 0.0)
        for k in range(nv):
            np.minimum(apsp, apsp[:, k, None] + apsp[None, k, :], out=apsp)
        self.apsp = apsp
        self._lock = threading.RLock()
        self._paths: dict[tuple[Point2, Point2], GeodesicPath] = {}
        self._info: dict[Point2, tuple[np.ndarray, np.ndarray]] = {}
        self.hits = 0
        self.misses = 0

    def register(self, pts: Iterable[Point2]) -> None:
        """Precompute vertex visibility for a batch of query points."""
        new = [as_point(p) for p in pts]
        with self._lock:
            new = [p for p in dict.fromkeys(new) if p not in self._info]
        if not new:
            return
        nv = len(self.base)
        arr = np.array(new, dtype=np.float64)
        if nv:
            vis = visibility_matrix(arr, self.base, self.env)
            diff = arr[:, None, :] - self.base[None, :, :]
            dd = np.where(vis, np.hypot(diff[..., 0], diff[..., 1]), np.inf)
            dv = (dd[:, :, None] + self.apsp[None, :, :]).min(axis=1)
        else:
            vis = np.zeros((len(new), 0), dtype=bool)
            dv = np.zeros((len(new), 0))
        with self._lock:
            for i, p in enumerate(new):
                self._info[p] = (vis[i], dv[i])

    def _point_info(self, p: Point2) -> tuple[np.ndarray, np.ndarray]:
        with self._lock:
            info = self._info.get(p)
        if info is None:
            self.register([p])
            with self._lock:
                info = self._info[p]
        return info

    def vertex_distances(self, p: Point2) -> np.ndarray:
        """Geodesic distance from ``p`` to every obstacle vertex."""
        return self._point_info(as_point(p))[1]

    def path(self, a: Point2, b: Point2) -> GeodesicPath:
        a, b = as_point(a), as_point(b)
        key = (a, b) if a <= b else (b, a)
        with self._lock:
            hit = self._paths.get(key)
            if hit is not None:
                self.hits += 1
                return hit if hit.source == a else hit.reversed()
            self.misses += 1
        if a == b:
            res = GeodesicPath((a,))
        else:
            res = self._astar_path(a, b)
        stored = res if res.source == key[0] else res.reversed()
        with self._lock:
            self._paths.setdefault(key, stored)
        return res

    def length(self, a: Point2, b: Point2) -> float:
        return self.path(a, b).length

    def _astar_path(self, a: Point2, b: Point2) -> GeodesicPath:
        for p in (a, b):
            if not self.env.is_free(p):
                raise NoPathError(f"{p} is not in free space")
        nv = len(self.base)
        vis_a, _ = self._point_info(a)
        vis_b, _ = self._point_info(b)
        src, dst = nv, nv + 1
        coords = [tuple(map(float, v)) for v in self.base] + [a, b]
        direct = not _kernels.seg_blocked(a[0], a[1], b[0], b[1], *self._arrays.args)
        to_b = {int(j): dist(coords[j], b) for j in np.flatnonzero(vis_b)}

        def neighbors(u: int):
            if u == src:
                if direct:
                    yield dst, dist(a, b)
                for j in np.flatnonzero(vis_a):
                    yield int(j), dist(a, coords[j])
                return
            yield from self._adj[u]
            w = to_b.get(u)
            if w is not None:
                yield dst, w

        order = _astar(coords, neighbors, src, dst)
        return GeodesicPath(tuple(coords[i] for i in order))

    def geodesic_sums(self, qpts: np.ndarray, attached: Sequence[Point2]) -> np.ndarray:
        """Sum of geodesic distances from each query point to all attached points."""
        att = np.array([as_point(p) for p in attached], dtype=np.float64).reshape(-1, 2)
        self.register(map(tuple, att))
        dv = np.array([self._point_info(tuple(p))[1] for p in att], dtype=np.float64).reshape(len(att), -1)
        return self.sums_with(qpts, att, dv)

    def prepare(self, attached: Sequence[Point2]) -> tuple[np.ndarray, np.ndarray]:
        att = [as_point(p) for p in attached]
        self.register(att)
        arr = np.array(att, dtype=np.float64).reshape(-1, 2)
        dv = np.array([self._point_info(p)[1] for p in att], dtype=np.float64).reshape(len(att), -1)
        return arr, np.ascontiguousarray(dv)

    def sums_with(self, qpts: np.ndarray, att: np.ndarray, dv: np.ndarray) -> np.ndarray:
        q = np.ascontiguousarray(np.reshape(qpts, (-1, 2)), dtype=np.float64)
        return _kernels.geodesic_sums(q, att, dv, *self._arrays.args)


def path_is_clear(p: GeodesicPath, env: MapEnv) -> bool:
    a = env.packed
    w = p.waypoints
    return not any(
        _kernels.seg_blocked(w[i][0], w[i][1], w[i + 1][0], w[i + 1][1], *a.args) for i in range(len(w) - 1)
    )


