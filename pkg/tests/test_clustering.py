from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import linkage as scipy_linkage
from scipy.spatial.distance import pdist

from obsteiner.clustering import (
    Dendrogram,
    Merge,
    PathMetricParams,
    agglomerate,
    cut_to_modules,
    module_dendrogram,
    path_distance,
    path_distance_matrix,
)
from obsteiner.errors import ValidationError
from obsteiner.visibility import GeodesicPath


def line_matrix(xs):
    x = np.asarray(xs, float)
    return np.abs(x[:, None] - x[None, :])


def kruskal_heights(pts: np.ndarray) -> list[float]:
    n = len(pts)
    edges = sorted((math.dist(pts[i], pts[j]), i, j) for i in range(n) for j in range(i + 1, n))
    parent = list(range(n))

    def find(u):
        while parent[u] != u:
            u = parent[u]
        return u

    out = []
    for w, i, j in edges:
        a, b = find(i), find(j)
        if a != b:
            parent[a] = b
            out.append(w)
    return out


class TestAgglomerate:
    def test_three_on_a_line(self):
        z = agglomerate([0, 1, 10], line_matrix([0, 1, 10]))
        assert z.merges == (Merge(0, 1, 1.0), Merge(2, 3, 10.0))

    def test_single_item(self):
        assert agglomerate(["a"], np.zeros((1, 1))).merges == ()

    def test_equal_distances_tie_break(self):
        d = np.ones((4, 4)) - np.eye(4)
        z = agglomerate(range(4), d)
        assert [(m.left, m.right) for m in z.merges] == [(0, 1), (2, 3), (4, 5)]
        z = agglomerate(range(4), d, "single")
        assert [(m.left, m.right) for m in z.merges] == [(0, 1), (2, 3), (4, 5)]

    def test_callable_distance(self):
        xs = [0.0, 1.0, 10.0]
        z = agglomerate(xs, lambda i, j: abs(xs[i] - xs[j]))
        assert [m.height for m in z.merges] == [1.0, 10.0]

    @pytest.mark.parametrize("seed", range(20))
    def test_single_linkage_is_kruskal(self, seed):
        pts = np.random.default_rng(seed).uniform(0, 1, (10, 2))
        d = np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1))
        z = agglomerate(range(10), d, "single")
        np.testing.assert_allclose([m.height for m in z.merges], kruskal_heights(pts), rtol=1e-12)

    @pytest.mark.parametrize("method", ["complete", "single"])
    def test_heights_match_scipy(self, method):
        pts = np.random.default_rng(11).uniform(0, 1, (30, 2))
        d = np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1))
        z = agglomerate(range(30), d, method)
        ref = scipy_linkage(pdist(pts), method=method)[:, 2]
        np.testing.assert_allclose([m.height for m in z.merges], ref, rtol=1e-12)

    @pytest.mark.parametrize(
        "bad",
        [np.array([[0, 1], [2, 0]]), np.array([[0, -1], [-1, 0]]), np.array([[1, 1], [1, 0]]), np.ones((3, 2))],
    )
    def test_rejects_bad_matrix(self, bad):
        with pytest.raises(ValidationError):
            agglomerate(range(2), bad.astype(float))

    def test_dendrogram_validation(self):
        with pytest.raises(ValidationError):
            Dendrogram((0, 1, 2), (Merge(0, 1, 2.0), Merge(2, 3, 1.0)))
        with pytest.raises(ValidationError):
            Dendrogram((0, 1, 2), (Merge(0, 1, 1.0), Merge(0, 3, 2.0)))

    def test_members(self):
        z = agglomerate([0, 1, 10], line_matrix([0, 1, 10]))
        assert sorted(z.members(3)) == [0, 1]
        assert sorted(z.members(4)) == [0, 1, 2]


class TestCut:
    z = agglomerate([0, 1, 10], line_matrix([0, 1, 10]))

    def test_all_singletons(self):
        cut = cut_to_modules(self.z, 3)
        assert cut.n_modules == 3 and cut.modules() == [[0], [1], [2]]

    def test_one_module(self):
        assert cut_to_modules(self.z, 1).modules() == [[0, 1, 2]]

    def test_two_modules(self):
        assert cut_to_modules(self.z, 2).modules() == [[0, 1], [2]]

    def test_tied_heights_give_fewer_modules(self):
        z = agglomerate(range(4), np.ones((4, 4)) - np.eye(4))
        cut = cut_to_modules(z, 3)
        assert cut.n_modules <= 3

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 25), st.integers(0, 10_000))
    def test_module_count_bounds_and_monotone(self, n, seed):
        pts = np.random.default_rng(seed).uniform(0, 1, (n, 2))
        d = np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1))
        z = agglomerate(range(n), d)
        counts = [cut_to_modules(z, s).n_modules for s in range(1, n + 1)]
        assert all(c <= s for c, s in zip(counts, range(1, n + 1)))
        assert counts == sorted(counts)

    def test_module_dendrogram(self):
        z = agglomerate(range(6), line_matrix([0, 1, 5, 6, 20, 40]))
        cut = cut_to_modules(z, 3)
        mz = module_dendrogram(z, cut)
        assert mz.n_leaves == 3 and len(mz.merges) == 2
        assert [m.height for m in mz.merges] == [m.height for m in z.merges[cut.n_merges:]]
        assert mz.merges[0].left in range(3) and mz.merges[0].right in range(3)


class TestPathDistance:
    root = (0.0, 0.0)
    u = GeodesicPath(((0.0, 0.0), (1.0, 0.0)))
    v = GeodesicPath(((0.0, 0.0), (0.0, 1.0)))

    def test_identical(self):
        assert path_distance(self.u, self.u, self.root) == 0.0

    def test_np2_orthogonal(self):
        assert path_distance(self.u, self.v, self.root, PathMetricParams(2)) == pytest.approx(math.pi, abs=1e-9)

    def test_np3_orthogonal(self):
        d = path_distance(self.u, self.v, self.root, PathMetricParams(3))
        assert d == pytest.approx(2.5 * math.pi / 2, abs=1e-9)

    def test_collinear_same_direction_is_zero(self):
        w = GeodesicPath(((0.0, 0.0), (3.0, 0.0)))
        assert path_distance(self.u, w, self.root) == 0.0

    def test_root_as_terminal_rejected(self):
        with pytest.raises(ValidationError):
            path_distance(GeodesicPath((self.root,)), self.u, self.root)

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(5)
        paths = [GeodesicPath(((0.0, 0.0), tuple(rng.uniform(-1, 1, 2)), tuple(rng.uniform(-2, 2, 2)))) for _ in range(8)]
        m = path_distance_matrix(paths, self.root, PathMetricParams(7))
        for i in range(8):
            for j in range(8):
                ref = path_distance(paths[i], paths[j], self.root, PathMetricParams(7))
                assert m[i, j] == pytest.approx(ref, rel=1e-9, abs=1e-12)
        assert np.array_equal(m, m.T) and (m >= 0).all()
