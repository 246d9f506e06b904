from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from conftest import scenario, square
from obsteiner.errors import NoCandidateError, ValidationError
from obsteiner.geometry import MapEnv, Polygon, convex_hull, triangulate_free_space
from obsteiner.steiner import (
    BundleParams,
    Module,
    SteinerTree,
    TreeEdge,
    TreeNode,
    build_path_set,
    build_tree,
    optimize_steiner_point,
    select_root,
    star_length,
    tree_violations,
)
from obsteiner.visibility import GeodesicPath, GeodesicRouter

EMPTY = MapEnv(4.0, ())
EMPTY_TRI = triangulate_free_space(EMPTY)
H = math.sqrt(3) / 2
UNIT_TRI = ((1.0, 1.0), (2.0, 1.0), (1.5, 1.0 + H))


def fermat_grid(pts, n=801):
    """Dense-grid minimiser of the summed distance over the bounding box of ``pts``."""
    p = np.asarray(pts)
    lo, hi = p.min(axis=0), p.max(axis=0)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    gx, gy = np.meshgrid(xs, ys)
    s = sum(np.hypot(gx - x, gy - y) for x, y in p)
    k = np.unravel_index(np.argmin(s), s.shape)
    return (gx[k], gy[k]), float(s[k])


class TestSelectRoot:
    def test_single(self):
        assert select_root([(3.0, 4.0)]) == 0

    def test_line(self):
        pts = [(0.0, 0.0), (1.0, 0.0), (10.0, 0.0)]
        assert select_root(pts) == 1

    def test_square_tie(self):
        assert select_root([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]) == 0

    def test_geodesic_metric(self, box_env):
        router = GeodesicRouter(box_env)
        pts = [(30.0, 50.0), (70.0, 50.0), (70.0, 70.0)]
        assert select_root(pts, "geodesic", router) in range(3)
        with pytest.raises(ValidationError):
            select_root(pts, "geodesic")


class TestPathSet:
    def test_two_terminals(self, empty_env):
        paths = build_path_set(Module(0, ((0.0, 0.0), (3.0, 4.0)), 0), empty_env)
        assert len(paths) == 1 and paths[0].length == pytest.approx(5.0)

    def test_singleton(self, empty_env):
        assert build_path_set(Module(0, ((1.0, 1.0),), 0), empty_env) == []

    def test_around_obstacle_match_dijkstra(self, box_env):
        from test_visibility import dijkstra_length
        from obsteiner.visibility import build_visibility_graph

        pts = ((30.0, 50.0), (70.0, 50.0), (50.0, 75.0))
        for path, t in zip(build_path_set(Module(0, pts, 0), box_env), pts[1:]):
            g = build_visibility_graph(box_env, [pts[0], t])
            assert path.length == pytest.approx(dijkstra_length(g, g.index(pts[0]), g.index(t)), rel=1e-9)


class TestOptimize:
    def test_equilateral_fermat(self):
        region = convex_hull(UNIT_TRI).region(EMPTY.eps)
        sp = optimize_steiner_point(UNIT_TRI, region, EMPTY_TRI, EMPTY)
        (gx, gy), gbest = fermat_grid(UNIT_TRI)
        centroid = np.mean(UNIT_TRI, axis=0)
        assert math.dist(sp.point, centroid) < 1e-2
        assert math.dist(sp.point, (gx, gy)) < 1e-2
        assert sp.cost == pytest.approx(math.sqrt(3), rel=1e-2)
        assert sp.cost <= gbest + 1e-6

    def test_obtuse_triangle_matches_grid(self):
        pts = ((0.5, 0.5), (3.5, 0.7), (1.0, 1.2))
        region = convex_hull(pts).region(EMPTY.eps)
        sp = optimize_steiner_point(pts, region, EMPTY_TRI, EMPTY)
        _, gbest = fermat_grid(pts)
        # optimum sits on the obtuse vertex; the search resolves it to its step size
        assert sp.cost == pytest.approx(gbest, rel=1e-4)

    def test_two_points(self):
        pts = ((1.0, 1.0), (3.0, 2.0))
        sp = optimize_steiner_point(pts, convex_hull(pts).region(EMPTY.eps), EMPTY_TRI, EMPTY)
        assert sp.cost == pytest.approx(math.dist(*pts), rel=1e-9)

    def test_collinear(self):
        pts = ((0.5, 1.0), (1.5, 1.0), (3.5, 1.0))
        sp = optimize_steiner_point(pts, convex_hull(pts).region(EMPTY.eps), EMPTY_TRI, EMPTY)
        assert sp.cost == pytest.approx(3.0, rel=1e-4)
        assert sp.point[1] == pytest.approx(1.0, abs=1e-4)
        assert 0.5 - 1e-6 <= sp.point[0] <= 3.5 + 1e-6

    def test_region_inside_obstacle(self):
        env = MapEnv(100.0, (square(10, 10, 80),))
        tri = triangulate_free_space(env)
        region = Polygon(((40, 40), (60, 40), (60, 60), (40, 60)))
        with pytest.raises(NoCandidateError):
            optimize_steiner_point(((5.0, 5.0), (95.0, 95.0)), region, tri, env)


def mod(pts, root=None):
    pts = tuple(pts)
    return Module(0, pts, select_root(pts) if root is None else root)


class TestBuildTree:
    def test_singleton(self, empty_env):
        t = build_tree(mod([(1.0, 1.0)]), empty_env, triangulate_free_space(empty_env))
        assert len(t.nodes) == 1 and t.edges == () and t.total_length == 0.0

    def test_two_terminals(self, empty_env):
        t = build_tree(mod([(1.0, 1.0), (4.0, 5.0)]), empty_env, triangulate_free_space(empty_env))
        assert t.steiner_points == [] and t.total_length == pytest.approx(5.0)

    def test_equilateral_side_100(self):
        env = MapEnv(200.0, ())
        h = 100 * H
        pts = ((50.0, 50.0), (150.0, 50.0), (100.0, 50.0 + h))
        t = build_tree(mod(pts, 0), env, triangulate_free_space(env))
        assert t.total_length == pytest.approx(100 * math.sqrt(3), rel=1e-2)
        assert tree_violations(t, env) == []

    def test_120_degree_condition(self):
        env = MapEnv(200.0, ())
        pts = ((40.0, 50.0), (160.0, 60.0), (90.0, 140.0))
        t = build_tree(mod(pts, 0), env, triangulate_free_space(env))
        (sp,) = t.steiner_points
        k = next(i for i, n in enumerate(t.nodes) if n.kind == "steiner")
        dirs = []
        for e in t.edges:
            if k in (e.a, e.b):
                w = e.path.waypoints if e.a == k else e.path.waypoints[::-1]
                dirs.append(math.atan2(w[1][1] - w[0][1], w[1][0] - w[0][0]))
        assert len(dirs) == 3
        for a, b in itertools.combinations(dirs, 2):
            ang = math.degrees(abs((a - b + math.pi) % (2 * math.pi) - math.pi))
            assert ang == pytest.approx(120.0, abs=5.0)

    def test_square_corners(self):
        env = MapEnv(200.0, ())
        pts = ((50.0, 50.0), (150.0, 50.0), (150.0, 150.0), (50.0, 150.0))
        t = build_tree(mod(pts), env, triangulate_free_space(env))
        assert 259.81 <= t.total_length <= 290.0

    @pytest.mark.parametrize("seed", range(6))
    def test_invariants_on_generated_maps(self, seed):
        env, pts = scenario(seed, 30)
        tri = triangulate_free_space(env)
        router = GeodesicRouter(env)
        for k in range(0, 30, 6):
            chunk = tuple(pts[k : k + 6])
            m = Module(k, chunk, select_root(chunk), tuple(range(k, k + 6)))
            t = build_tree(m, env, tri, BundleParams(), router)
            assert tree_violations(t, env, m.terminal_ids) == []
            assert t.total_length <= star_length(m, env, router) + 1e-9
            far = max(router.length(a, b) for a, b in itertools.combinations(chunk, 2))
            assert t.total_length >= far - 1e-9
            n_s = len(t.steiner_points)
            assert len(t.nodes) == 6 + n_s and len(t.edges) == 5 + n_s

    def test_deterministic(self):
        env, pts = scenario(1, 12)
        tri = triangulate_free_space(env)
        a = build_tree(mod(pts), env, tri)
        b = build_tree(mod(pts), env, tri)
        assert a == b


class TestViolations:
    def test_detects_problems(self, box_env):
        p, q, r = (10.0, 50.0), (90.0, 50.0), (10.0, 10.0)
        nodes = (TreeNode(p, "root", 0), TreeNode(q, "terminal", 1), TreeNode(r, "steiner"))
        bad = SteinerTree(nodes, (TreeEdge(0, 1, GeodesicPath((p, q))), TreeEdge(0, 2, GeodesicPath((p, r)))))
        msgs = " ".join(tree_violations(bad, box_env))
        assert "crosses an obstacle" in msgs and "degree" in msgs
        cyc = SteinerTree(nodes[:2], (TreeEdge(0, 1, GeodesicPath((p, q))), TreeEdge(1, 0, GeodesicPath((q, p)))))
        assert tree_violations(cyc)
