"""Acceptance gate: one test per criterion.

Each test records a ``criterion N: PASS|FAIL`` line that is printed in the
pytest terminal summary (and to stdout when run with ``-s``). Run alone with

    pytest tests/test_acceptance.py -v
"""

from __future__ import annotations

import functools
import math
import time

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from obsteiner import io
from obsteiner.clustering import PathMetricParams, path_distance
from obsteiner.concat import Weights, concatenation_steps, run_concatenation, trace_for
from obsteiner.geometry import MapEnv, segment_blocked
from obsteiner.mapgen import ScenarioSpec, generate_scenario
from obsteiner.pipeline import SolveConfig, bench, initial_forest, modules_for_theta, solve
from obsteiner.steiner import BundleParams, tree_violations
from obsteiner.visibility import GeodesicPath, GeodesicRouter, build_visibility_graph, shortest_path

RESULTS: dict[int, str] = {}

SEEDS = range(20)
THETAS = (0.05, 0.25, 0.5)
LANDSCAPE_SEEDS = range(10)
LANDSCAPE_THETA = 0.5
THETA_GRID = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


@functools.lru_cache(maxsize=None)
def run_all_merges(seed: int, theta: float):
    """Initial forest and every forest of the full concatenation for one scenario."""
    env, terminals = generate_scenario(ScenarioSpec(seed=seed))
    prep = initial_forest(env, terminals, modules_for_theta(theta, len(terminals)))
    forests = list(concatenation_steps(prep.initial, prep.module_z, env, prep.tri, BundleParams(), prep.router))
    return env, terminals, prep, forests


def expected_partitions(prep) -> list[set[frozenset[int]]]:
    """Module terminal sets after each step, derived from the cut and the module dendrogram."""
    nodes = {k: frozenset(m) for k, m in enumerate(prep.cut.modules())}
    out = [set(nodes.values())]
    s = len(nodes)
    for k, mg in enumerate(prep.module_z.merges):
        nodes[s + k] = nodes.pop(mg.left) | nodes.pop(mg.right)
        out.append(set(nodes.values()))
    return out


def fermat_grid(pts, n=1001):
    p = np.asarray(pts)
    lo, hi = p.min(axis=0), p.max(axis=0)
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n))
    s = sum(np.hypot(gx - x, gy - y) for x, y in p)
    k = np.unravel_index(np.argmin(s), s.shape)
    return (float(gx[k]), float(gy[k])), float(s[k])


def test_criterion_01_fermat():
    env = MapEnv(200.0, ())
    h = 100 * math.sqrt(3) / 2
    pts = [(50.0, 50.0), (150.0, 50.0), (100.0, 50.0 + h)]
    solve(env, [(20.0, 20.0), (60.0, 25.0), (30.0, 70.0)], SolveConfig(modules=1))  # compile kernels
    t0 = time.perf_counter()
    res = solve(env, pts, SolveConfig(modules=1))
    elapsed = time.perf_counter() - t0
    (tree,) = res.best.trees
    grid_pt, grid_len = fermat_grid(pts)
    centroid = tuple(np.mean(pts, axis=0))
    sp = tree.steiner_points
    off = math.dist(sp[0], centroid) if len(sp) == 1 else math.inf
    ok = (
        abs(tree.total_length - 100 * math.sqrt(3)) <= 0.01 * 100 * math.sqrt(3)
        and off <= 1.0
        and elapsed < 1.0
        and math.dist(grid_pt, centroid) <= 1.0
    )
    record(1, ok, f"length {tree.total_length:.5f} (grid oracle {grid_len:.5f}), centroid offset {off:.4f}, "
                  f"{elapsed:.3f} s")


def test_criterion_02_unit_square():
    env = MapEnv(200.0, ())
    pts = [(50.0, 50.0), (150.0, 50.0), (150.0, 150.0), (50.0, 150.0)]
    (tree,) = solve(env, pts, SolveConfig(modules=1)).best.trees
    lo = math.sqrt(3) / 2 * 300.0
    ok = lo <= tree.total_length <= 290.0
    record(2, ok, f"length {tree.total_length:.4f} in [{lo:.2f}, 290] (optimum {100 * (1 + math.sqrt(3)):.3f})")


def all_runs():
    for seed in SEEDS:
        for theta in THETAS:
            yield (seed, theta, *run_all_merges(seed, theta))


def test_criterion_03_obstacle_avoidance():
    bad, segs, trees = [], 0, 0
    for seed, theta, env, _, _, forests in all_runs():
        seen = set()
        for f in forests:
            for t in f.trees:
                if id(t) in seen:
                    continue
                seen.add(id(t))
                trees += 1
                for e in t.edges:
                    w = e.path.waypoints
                    for a, b in zip(w, w[1:]):
                        segs += 1
                        if segment_blocked(a, b, env):
                            bad.append((seed, theta, a, b))
    record(3, not bad, f"{len(bad)} blocked of {segs} segments in {trees} trees over {len(SEEDS) * len(THETAS)} runs")


def test_criterion_04_structure():
    bad, trees = [], 0
    for seed, theta, env, _, prep, forests in all_runs():
        for step, (f, want) in enumerate(zip(forests, expected_partitions(prep))):
            got = {frozenset(t.terminal_ids) for t in f.trees}
            if got != want:
                bad.append((seed, theta, step, "partition"))
            for t in f.trees:
                trees += 1
                for msg in tree_violations(t, None, sorted(t.terminal_ids)):
                    bad.append((seed, theta, step, msg))
                if len(t.terminal_ids) != len(set(t.terminal_ids)):
                    bad.append((seed, theta, step, "duplicate terminal"))
    record(4, not bad, f"{len(bad)} violations over {trees} tree checks in {len(SEEDS) * len(THETAS)} runs"
                       + (f"; first {bad[0]}" if bad else ""))


def test_criterion_05_star_bound():
    bad, trees, worst = [], 0, -math.inf
    for seed, theta, env, _, prep, forests in all_runs():
        router = prep.router
        seen = set()
        for f in forests:
            for t in f.trees:
                if id(t) in seen:
                    continue
                seen.add(id(t))
                trees += 1
                root = t.root.point
                star = sum(router.length(root, p) for p in t.terminals if p != root)
                worst = max(worst, t.total_length - star)
                if t.total_length > star + 1e-9:
                    bad.append((seed, theta, t.module_id))
    record(5, not bad, f"{len(bad)} violations over {trees} trees; max(length - star) = {worst:.3e}")


def dijkstra_length(g, s, t):
    n = len(g.vertices)
    r, c, w = zip(*((u, v, d) for u, adj in enumerate(g.adjacency) for v, d in adj))
    return float(dijkstra(csr_matrix((w, (r, c)), shape=(n, n)), indices=s)[t])


def test_criterion_06_geodesics():
    worst, bad = 0.0, 0
    for k in range(50):
        env, _ = generate_scenario(ScenarioSpec(seed=1000 + k, n_terminals=0))
        rng = np.random.default_rng(k)
        pts = []
        while len(pts) < 2:
            p = tuple(float(v) for v in rng.uniform(0, env.side, 2))
            if env.is_free(p):
                pts.append(p)
        g = build_visibility_graph(env, pts)
        ref = dijkstra_length(g, g.index(pts[0]), g.index(pts[1]))
        for got in (shortest_path(g, *pts).length, GeodesicRouter(env).path(*pts).length):
            rel = abs(got - ref) / ref
            worst = max(worst, rel)
            bad += rel > 1e-9
    record(6, bad == 0, f"50 instances, max relative gap {worst:.2e} (graph A* and router A* vs Dijkstra)")


def test_criterion_07_path_metric():
    root = (0.0, 0.0)
    u = GeodesicPath((root, (1.0, 0.0)))
    v = GeodesicPath((root, (0.0, 1.0)))
    d2 = path_distance(u, v, root, PathMetricParams(2))
    d3 = path_distance(u, v, root, PathMetricParams(3))
    ok = abs(d2 - math.pi) <= 1e-9 and abs(d3 - 2.5 * math.pi / 2) <= 1e-9
    record(7, ok, f"NP=2 d={d2:.12f} (pi), NP=3 d={d3:.12f} (2.5*pi/2={2.5 * math.pi / 2:.12f})")


def test_criterion_08_concatenation_terminal_state():
    details, ok = [], True
    for seed, theta in ((1, 0.1), (2, 0.05)):
        env, terminals = generate_scenario(ScenarioSpec(seed=seed))
        s = modules_for_theta(theta, len(terminals))
        prep = initial_forest(env, terminals, s)
        _, trace = run_concatenation(prep.initial, prep.module_z, Weights(1.0, 0.5), env=env, tri=prep.tri,
                                     router=prep.router)
        last = trace.records[-1]
        this = len(trace) == s and last.s == 1 and last.L_d == 0.0
        ok &= this
        details.append(f"seed {seed}: s0={s}, records={len(trace)}, final s={last.s}, L_d={last.L_d}")
    record(8, ok, "; ".join(details))


def test_criterion_09_landscape_trend():
    dec, interior, argmins = 0, 0, []
    for seed in LANDSCAPE_SEEDS:
        _, _, _, forests = run_all_merges(seed, LANDSCAPE_THETA)
        hi = trace_for(forests, Weights(12.0, 0.5))
        lo = trace_for(forests, Weights(0.1, 0.5))
        dec += hi.records[-1].F < hi.records[0].F
        k = lo.argmin()
        argmins.append(k)
        interior += 0 < k < len(lo) - 1
    ok = dec >= 8 and interior >= 5
    s0 = modules_for_theta(LANDSCAPE_THETA, 100)
    record(9, ok, f"theta={LANDSCAPE_THETA} (s0={s0}), w_d=0.5: w_l=12 final<initial in {dec}/10 (need 8); "
                  f"w_l=0.1 interior argmin in {interior}/10 (need 5), argmin steps {argmins}")


@functools.lru_cache(maxsize=None)
def bench_rows():
    t0 = time.perf_counter()
    rows = bench(range(50), THETA_GRID)
    return rows, time.perf_counter() - t0


def test_criterion_10_scale():
    env, terminals = generate_scenario(ScenarioSpec(seed=0))
    t0 = time.perf_counter()
    solve(env, terminals, SolveConfig(theta=0.25))
    single = time.perf_counter() - t0
    rows, total = bench_rows()
    errors = sum(1 for r in rows if r["error"])
    ok = single < 60.0 and total < 7200.0 and len(rows) == 500
    record(10, ok, f"theta=0.25 end-to-end {single:.1f} s (< 60); bench {len(rows)} configurations in "
                   f"{total / 60:.1f} min (< 120), {errors} error rows")


def test_bench_mean_nodes_at_half():
    rows, _ = bench_rows()
    nodes = [r["mean_nodes"] for r in rows if r["theta"] == 0.5 and not r["error"]]
    assert len(nodes) == 50
    assert all(1.0 <= n <= 3.0 for n in nodes)


def test_criterion_11_determinism():
    spec = ScenarioSpec(seed=4)
    docs = []
    for _ in range(2):
        env, terminals = generate_scenario(spec)
        d = io.result_document(solve(env, terminals, SolveConfig(theta=0.25, w_d=0.5)), None)
        d.pop("timings_ms")
        docs.append(io.dumps(d))
    same = docs[0] == docs[1]
    record(11, same, f"two runs of seed 4, theta=0.25: {len(docs[0])} bytes each, identical={same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
