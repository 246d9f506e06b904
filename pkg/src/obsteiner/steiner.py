"""Per-module Steiner trees by hierarchical bundling of root geodesics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from obsteiner import _kernels
from obsteiner.clustering import Linkage, PathMetricParams, agglomerate, path_distance_matrix
from obsteiner.errors import NoCandidateError, NoPathError, ValidationError
from obsteiner.geometry import (
    BarycentricCoord,
    FreeSpaceTriangulation,
    MapEnv,
    Point2,
    Polygon,
    as_point,
    barycentric_weights,
    cartesian_to_barycentric,
    convex_hull,
    convex_polygons_intersect,
    point_triangle_distances,
    segment_blocked,
)
from obsteiner.visibility import GeodesicPath, GeodesicRouter

NodeKind = Literal["terminal", "root", "steiner"]

# centroid of the triangle in (r1, r2) coordinates
_CENTROID_R = (4.0 / 9.0, 0.5)
_MOVE_TOL = 1e-12


@dataclass(frozen=True)
class Module:
    id: int
    terminals: tuple[Point2, ...]
    root: int
    terminal_ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        terms = tuple(as_point(p) for p in self.terminals)
        if not terms:
            raise ValidationError("module has no terminals")
        if not 0 <= self.root < len(terms):
            raise ValidationError(f"root index {self.root} out of range")
        ids = tuple(self.terminal_ids) or tuple(range(len(terms)))
        if len(ids) != len(terms):
            raise ValidationError("terminal_ids length does not match terminals")
        object.__setattr__(self, "terminals", terms)
        object.__setattr__(self, "terminal_ids", ids)

    @property
    def root_point(self) -> Point2:
        return self.terminals[self.root]


@dataclass(frozen=True)
class TreeNode:
    point: Point2
    kind: NodeKind
    terminal_id: int | None = None


@dataclass(frozen=True)
class TreeEdge:
    a: int
    b: int
    path: GeodesicPath


@dataclass(frozen=True)
class SteinerTree:
    nodes: tuple[TreeNode, ...]
    edges: tuple[TreeEdge, ...]
    module_id: int = 0

    @property
    def total_length(self) -> float:
        return sum(e.path.length for e in self.edges)

    @property
    def root(self) -> TreeNode:
        return next(n for n in self.nodes if n.kind == "root")

    @property
    def terminal_ids(self) -> list[int]:
        return [n.terminal_id for n in self.nodes if n.kind != "steiner"]

    @property
    def terminals(self) -> list[Point2]:
        return [n.point for n in self.nodes if n.kind != "steiner"]

    @property
    def steiner_points(self) -> list[Point2]:
        return [n.point for n in self.nodes if n.kind == "steiner"]

    def degrees(self) -> list[int]:
        deg = [0] * len(self.nodes)
        for e in self.edges:
            deg[e.a] += 1
            deg[e.b] += 1
        return deg


def tree_violations(tree: SteinerTree, env: MapEnv | None = None, terminal_ids: Sequence[int] | None = None) -> list[str]:
    """Every broken structural invariant of ``tree``, as messages."""
    out: list[str] = []
    n = len(tree.nodes)
    if sum(1 for v in tree.nodes if v.kind == "root") != 1:
        out.append("tree must have exactly one root")
    if len(tree.edges) != n - 1:
        out.append(f"|E|={len(tree.edges)} but |V|-1={n - 1}")
    parent = list(range(n))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for e in tree.edges:
        ra, rb = find(e.a), find(e.b)
        if ra == rb:
            out.append(f"edge ({e.a},{e.b}) closes a cycle")
        parent[ra] = rb
        pa, pb = tree.nodes[e.a].point, tree.nodes[e.b].point
        if {e.path.source, e.path.target} != {pa, pb}:
            out.append(f"edge ({e.a},{e.b}) polyline does not join its endpoints")
        if env is not None:
            w = e.path.waypoints
            for i in range(len(w) - 1):
                if segment_blocked(w[i], w[i + 1], env):
                    out.append(f"edge ({e.a},{e.b}) segment {w[i]}->{w[i + 1]} crosses an obstacle")
    if n and len({find(u) for u in range(n)}) != 1:
        out.append("tree is not connected")
    for u, d in enumerate(tree.degrees()):
        if tree.nodes[u].kind == "steiner" and d < 3:
            out.append(f"steiner node {u} has degree {d}")
    ids = tree.terminal_ids
    if len(ids) != len(set(ids)):
        out.append("a terminal appears more than once")
    if terminal_ids is not None and sorted(ids) != sorted(terminal_ids):
        out.append("tree terminals differ from its module")
    return out


@dataclass(frozen=True)
class BundleParams:
    n_points: int = 20
    max_refine_iters: int = 3
    improvement_tol: float = 1e-3
    candidate_triangle_cap: int = 64
    linkage: Linkage = "complete"
    root_metric: Literal["euclidean", "geodesic"] = "euclidean"
    step_init: float = 0.25
    step_min: float = 1e-4
    max_polls: int = 400

    def __post_init__(self) -> None:
        if self.n_points < 2:
            raise ValidationError("n_points must be >= 2")
        if self.max_refine_iters < 0 or self.candidate_triangle_cap < 1:
            raise ValidationError("refine iterations and triangle cap must be positive")
        if not self.improvement_tol > 0:
            raise ValidationError("improvement_tol must be > 0")


def select_root(
    terminals: Sequence[Point2],
    metric: Literal["euclidean", "geodesic"] = "euclidean",
    router: GeodesicRouter | None = None,
) -> int:
    """Terminal with the smallest summed distance to the others (lowest index on ties)."""
    pts = np.asarray(terminals, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise ValidationError("cannot select a root from no terminals")
    if metric == "geodesic":
        if router is None:
            raise ValidationError("geodesic root selection needs a router")
        att, dv = router.prepare([tuple(p) for p in pts])
        sums = router.sums_with(pts, att, dv)
    else:
        diff = pts[:, None, :] - pts[None, :, :]
        sums = np.hypot(diff[..., 0], diff[..., 1]).sum(axis=1)
    return int(np.argmin(sums))


def build_path_set(m: Module, env: MapEnv, router: GeodesicRouter | None = None) -> list[GeodesicPath]:
    """Root-to-terminal geodesics, in terminal order with the root skipped."""
    router = router or GeodesicRouter(env)
    router.register(m.terminals)
    paths = []
    for k, p in enumerate(m.terminals):
        if k == m.root:
            continue
        try:
            paths.append(router.path(m.root_point, p))
        except NoPathError as exc:
            raise NoPathError(f"terminal {m.terminal_ids[k]} at {p} is unreachable from the root") from exc
    return paths


@dataclass(frozen=True)
class SteinerPoint:
    point: Point2
    cost: float
    coord: BarycentricCoord


def _cartesian(verts: np.ndarray, r: np.ndarray) -> np.ndarray:
    wa, wb, wc = barycentric_weights(r[:, 0], r[:, 1])
    return wa[:, None] * verts[0] + wb[:, None] * verts[1] + wc[:, None] * verts[2]


def candidate_triangles(region: Polygon, tri: FreeSpaceTriangulation, cap: int, eps: float) -> np.ndarray:
    reg = np.asarray(region.vertices, dtype=np.float64)
    lo, hi = reg.min(axis=0) - eps, reg.max(axis=0) + eps
    tlo, thi = tri.verts.min(axis=1), tri.verts.max(axis=1)
    near = np.flatnonzero(np.all(thi >= lo, axis=1) & np.all(tlo <= hi, axis=1))
    hits = np.array([t for t in near if convex_polygons_intersect(tri.verts[t], reg, eps)], dtype=np.int64)
    if len(hits) > cap:
        cen = tri.verts[hits].mean(axis=1)
        d = np.hypot(*(cen - reg.mean(axis=0)).T)
        hits = hits[np.argsort(d, kind="stable")[:cap]]
    return hits


def optimize_steiner_point(
    attached: Sequence[Point2],
    region: Polygon,
    tri: FreeSpaceTriangulation,
    env: MapEnv,
    params: BundleParams = BundleParams(),
    router: GeodesicRouter | None = None,
    warm: Sequence[Point2] = (),
) -> SteinerPoint:
    """Minimise the summed geodesic distance to ``attached`` over free-space triangles.

    Candidate triangles meet ``region``; each is searched by compass
    descent in (r1, r2). Triangles whose Euclidean lower bound cannot beat
    the incumbent are skipped, which does not change the result.
    """
    if len(attached) < 2:
        raise ValidationError("need at least two attached points")
    router = router or GeodesicRouter(env)
    att, dv = router.prepare(attached)
    cands = candidate_triangles(region, tri, params.candidate_triangle_cap, env.eps)
    if len(cands) == 0:
        raise NoCandidateError("search region does not meet free space")
    verts = tri.verts[cands]

    def f(q: np.ndarray) -> np.ndarray:
        return router.sums_with(q, att, dv)

    lower = point_triangle_distances(att, verts).sum(axis=0)
    starts = np.tile(np.array(_CENTROID_R), (len(cands), 1))
    start_pts = np.array([_cartesian(verts[i], starts[i : i + 1])[0] for i in range(len(cands))])
    start_vals = f(start_pts)
    # warm seeds are extra starts; the centroid start is always kept so a
    # warm run is never worse than a cold one on the same triangle
    extra: dict[int, list[tuple[np.ndarray, float]]] = {}
    if len(warm):
        wpts = np.array([as_point(p) for p in warm], dtype=np.float64)
        near = point_triangle_distances(wpts, verts) <= env.eps
        for p, row in zip(wpts, near):
            hit = np.flatnonzero(row)
            if len(hit) == 0:
                continue
            i = int(hit[0])
            coord = cartesian_to_barycentric((float(p[0]), float(p[1])), int(cands[i]), tri)
            r = np.array([coord.r1, coord.r2])
            extra.setdefault(i, []).append((r, float(f(_cartesian(verts[i], r[None, :]))[0])))
    best_i = int(np.argmin(start_vals))
    best_r, best_v = starts[best_i].copy(), float(start_vals[best_i])
    for i, seeds in extra.items():
        for r, v in seeds:
            if v < best_v:
                best_i, best_r, best_v = i, r.copy(), v
    for i in np.argsort(lower, kind="stable"):
        if lower[i] >= best_v * (1.0 - _MOVE_TOL):
            break
        for r0, v0 in [(starts[i], float(start_vals[i]))] + extra.get(int(i), []):
            r, v = _compass(router, att, dv, verts[i], r0, v0, params)
            if v < best_v:
                best_i, best_r, best_v = int(i), r, v
    point = _cartesian(verts[best_i], best_r[None, :])[0]
    coord = BarycentricCoord(int(cands[best_i]), float(best_r[0]), float(best_r[1]))
    return SteinerPoint((float(point[0]), float(point[1])), best_v, coord)


def _compass(router: GeodesicRouter, att: np.ndarray, dv: np.ndarray, verts: np.ndarray, r0: np.ndarray, f0: float,
             params: BundleParams) -> tuple[np.ndarray, float]:
    r1, r2, v = _kernels.compass_search(
        np.ascontiguousarray(verts), float(r0[0]), float(r0[1]), f0, params.step_init, params.step_min,
        params.max_polls, _MOVE_TOL, att, dv, *router.env.packed.args,
    )
    return np.array([r1, r2]), v


@dataclass
class _Branch:
    tops: list[int]
    hull: list[Point2] = field(default_factory=list)


def build_tree(
    m: Module,
    env: MapEnv,
    tri: FreeSpaceTriangulation,
    params: BundleParams = BundleParams(),
    router: GeodesicRouter | None = None,
    warm: Sequence[Point2] = (),
) -> SteinerTree:
    """Steiner tree over one module.

    Root geodesics are clustered into a path dendrogram; each merge tries a
    Steiner point joining the root and both branches (kept only when it
    shortens the connection), then a top-down sweep re-optimises every
    Steiner point against its tree neighbours.
    """
    router = router or GeodesicRouter(env)
    eps = env.eps
    tol = params.improvement_tol
    root_pt = m.root_point
    points: list[Point2] = [root_pt]
    kinds: list[NodeKind] = ["root"]
    tids: list[int | None] = [m.terminal_ids[m.root]]
    if len(m.terminals) == 1:
        return SteinerTree((TreeNode(root_pt, "root", tids[0]),), (), m.id)

    paths = build_path_set(m, env, router)
    leaves: list[int] = []
    for k, p in enumerate(m.terminals):
        if k == m.root:
            continue
        leaves.append(len(points))
        points.append(p)
        kinds.append("terminal")
        tids.append(m.terminal_ids[k])
    children: dict[int, list[int]] = {}
    regions: dict[int, list[Point2]] = {}

    def geo_sum(src: Point2, targets: Sequence[Point2]) -> float:
        att, dv = router.prepare(targets)
        return float(router.sums_with(np.array([src]), att, dv)[0])

    if len(paths) == 1:
        children[0] = [leaves[0]]
    else:
        d = path_distance_matrix(paths, root_pt, PathMetricParams(params.n_points))
        z = agglomerate(range(len(paths)), d, params.linkage)
        branches = {k: _Branch([leaves[k]], list(convex_hull(p.waypoints).vertices)) for k, p in enumerate(paths)}
        n = len(paths)
        for k, mg in enumerate(z.merges):
            a, b = branches.pop(mg.left), branches.pop(mg.right)
            tops = a.tops + b.tops
            hull = list(convex_hull(a.hull + b.hull).vertices)
            branch = _Branch(tops, hull)
            top_pts = [points[t] for t in tops]
            base = geo_sum(root_pt, top_pts)
            try:
                sp = optimize_steiner_point(
                    [root_pt] + top_pts, convex_hull(hull).region(eps), tri, env, params, router, warm
                )
            except NoCandidateError:
                sp = None
            if sp is not None and sp.cost < (1.0 - tol) * base:
                sid = len(points)
                points.append(sp.point)
                kinds.append("steiner")
                tids.append(None)
                children[sid] = tops
                regions[sid] = hull
                branch = _Branch([sid], hull)
            branches[n + k] = branch
        (final,) = branches.values()
        children[0] = final.tops

    parent = {c: u for u, cs in children.items() for c in cs}

    def bfs_steiner() -> list[int]:
        order, queue = [], deque([0])
        while queue:
            u = queue.popleft()
            if kinds[u] == "steiner":
                order.append(u)
            queue.extend(children.get(u, ()))
        return order

    def local_cost(s: int) -> float:
        return geo_sum(points[s], [points[parent[s]]] + [points[c] for c in children[s]])

    steiner = bfs_steiner()
    if steiner and params.max_refine_iters > 0:
        total = sum(geo_sum(points[u], [points[c] for c in cs]) for u, cs in children.items())
        for _ in range(params.max_refine_iters):
            gain = 0.0
            for s in steiner:
                nbrs = [points[parent[s]]] + [points[c] for c in children[s]]
                cur = local_cost(s)
                region = convex_hull(regions[s] + nbrs + [points[s]]).region(eps)
                try:
                    sp = optimize_steiner_point(nbrs, region, tri, env, params, router, [points[s], *warm])
                except NoCandidateError:
                    continue
                if sp.cost < cur * (1.0 - _MOVE_TOL):
                    points[s] = sp.point
                    gain += cur - sp.cost
            if gain < tol * total:
                break
            total -= gain

    # splice Steiner points that lost their branching role
    changed = True
    while changed:
        changed = False
        for s in list(children):
            if kinds[s] != "steiner" or len(children[s]) >= 2:
                continue
            p = parent.pop(s)
            children[p].remove(s)
            for c in children.pop(s):
                children[p].append(c)
                parent[c] = p
            changed = True

    order: list[int] = []
    queue = deque([0])
    while queue:
        u = queue.popleft()
        order.append(u)
        queue.extend(children.get(u, ()))
    index = {u: i for i, u in enumerate(order)}
    nodes = tuple(TreeNode(points[u], kinds[u], tids[u]) for u in order)
    edges = tuple(
        TreeEdge(index[u], index[c], router.path(points[u], points[c])) for u in order for c in children.get(u, ())
    )
    return SteinerTree(nodes, edges, m.id)


def star_length(m: Module, env: MapEnv, router: GeodesicRouter | None = None) -> float:
    """Total length of the unbundled root star."""
    return sum(p.length for p in build_path_set(m, env, router))
