"""End-to-end runs: cluster, build module trees, concatenate; plus batch drivers."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from obsteiner.clustering import ClusterCut, Dendrogram, Linkage, agglomerate, cut_to_modules, module_dendrogram
from obsteiner.concat import CostTrace, Forest, Policy, Weights, concatenation_steps, run_concatenation, trace_for
from obsteiner.errors import ObSteinerError, ValidationError
from obsteiner.geometry import FreeSpaceTriangulation, MapEnv, Point2, triangulate_free_space
from obsteiner.mapgen import ScenarioSpec, generate_scenario
from obsteiner.steiner import BundleParams, Module, SteinerTree, build_path_set, build_tree, select_root
from obsteiner.visibility import GeodesicRouter


def modules_for_theta(theta: float, n: int) -> int:
    if not 0 < theta <= 1:
        raise ValidationError(f"theta must lie in (0, 1], got {theta}")
    if theta * n < 1:
        raise ValidationError(f"theta * n = {theta * n:g} is below one module")
    return max(1, math.floor(theta * n + 0.5))


@dataclass(frozen=True)
class SolveConfig:
    theta: float | None = None
    modules: int | None = None
    w_l: float = 1.0
    w_d: float = 0.0
    n_points: int = 20
    policy: str = "argmin"
    linkage: Linkage = "complete"

    def __post_init__(self) -> None:
        if (self.theta is None) == (self.modules is None):
            raise ValidationError("give exactly one of theta or modules")
        if self.modules is not None and self.modules < 1:
            raise ValidationError("modules must be >= 1")
        Policy.parse(self.policy)
        Weights(self.w_l, self.w_d)

    def initial_s(self, n: int) -> int:
        if self.theta is not None:
            return modules_for_theta(self.theta, n)
        return self.modules

    @property
    def bundle(self) -> BundleParams:
        return BundleParams(n_points=self.n_points, linkage=self.linkage)

    @property
    def weights(self) -> Weights:
        return Weights(self.w_l, self.w_d)


@dataclass
class Timings:
    """Wall-clock phase durations in milliseconds (monotonic clock)."""

    values: dict[str, float] = field(default_factory=dict)

    def add(self, key: str, start: float) -> None:
        self.values[key] = self.values.get(key, 0.0) + (time.perf_counter() - start) * 1e3


@dataclass
class Prepared:
    env: MapEnv
    terminals: list[Point2]
    tri: FreeSpaceTriangulation
    router: GeodesicRouter
    z: Dendrogram
    cut: ClusterCut
    initial: Forest
    module_z: Dendrogram


def cluster_terminals(terminals: Sequence[Point2], linkage: Linkage = "complete") -> Dendrogram:
    pts = np.asarray(terminals, dtype=np.float64).reshape(-1, 2)
    diff = pts[:, None, :] - pts[None, :, :]
    return agglomerate(range(len(pts)), np.hypot(diff[..., 0], diff[..., 1]), linkage)


def initial_forest(
    env: MapEnv,
    terminals: Sequence[Point2],
    s: int,
    params: BundleParams = BundleParams(),
    timings: Timings | None = None,
    tri: FreeSpaceTriangulation | None = None,
    router: GeodesicRouter | None = None,
) -> Prepared:
    timings = timings if timings is not None else Timings()
    terminals = [tuple(map(float, p)) for p in terminals]
    if not terminals:
        raise ValidationError("no terminals")
    for k, p in enumerate(terminals):
        if not env.is_free(p):
            raise ValidationError(f"terminal {k} at {p} is not in free space")
    t0 = time.perf_counter()
    tri = tri or triangulate_free_space(env)
    router = router or GeodesicRouter(env)
    timings.add("triangulate", t0)
    t0 = time.perf_counter()
    z = cluster_terminals(terminals, params.linkage)
    cut = cut_to_modules(z, s)
    timings.add("cluster", t0)
    modules = []
    for mid, members in enumerate(cut.modules()):
        pts = tuple(terminals[i] for i in members)
        modules.append(Module(mid, pts, select_root(pts, params.root_metric, router), tuple(members)))
    t0 = time.perf_counter()
    for m in modules:
        build_path_set(m, env, router)
    timings.add("paths", t0)
    t0 = time.perf_counter()
    trees = tuple(build_tree(m, env, tri, params, router) for m in modules)
    timings.add("optimize", t0)
    return Prepared(env, terminals, tri, router, z, cut, Forest(trees), module_dendrogram(z, cut))


@dataclass
class SolveResult:
    config: SolveConfig
    env: MapEnv
    terminals: list[Point2]
    initial: Forest
    best: Forest
    trace: CostTrace
    timings: dict[str, float]


def solve(env: MapEnv, terminals: Sequence[Point2], config: SolveConfig) -> SolveResult:
    timings = Timings()
    t0 = time.perf_counter()
    params = config.bundle
    prep = initial_forest(env, terminals, config.initial_s(len(terminals)), params, timings)
    t1 = time.perf_counter()
    best, trace = run_concatenation(
        prep.initial,
        prep.module_z,
        config.weights,
        Policy.parse(config.policy),
        env=env,
        tri=prep.tri,
        params=params,
        router=prep.router,
    )
    timings.add("concatenate", t1)
    timings.add("total", t0)
    return SolveResult(config, env, prep.terminals, prep.initial, best, trace, timings.values)


def landscape(
    env: MapEnv,
    terminals: Sequence[Point2],
    s: int,
    w_l_values: Sequence[float],
    w_d: float = 0.5,
    params: BundleParams = BundleParams(),
) -> tuple[list[Forest], dict[float, CostTrace]]:
    """Full concatenation once; one cost trace per ``w_l``.

    Merges do not depend on the weights, so every trace shares the same
    forests.
    """
    prep = initial_forest(env, terminals, s, params)
    forests = list(concatenation_steps(prep.initial, prep.module_z, env, prep.tri, params, prep.router))
    return forests, {wl: trace_for(forests, Weights(wl, w_d)) for wl in w_l_values}


BENCH_COLUMNS = (
    "seed",
    "theta",
    "s",
    "time_total",
    "time_paths",
    "time_optimize",
    "mean_tree_length",
    "mean_nodes",
    "error",
)


def bench_row(spec: ScenarioSpec, theta: float, params: BundleParams = BundleParams()) -> dict:
    row: dict = {"seed": spec.seed, "theta": theta}
    t0 = time.perf_counter()
    try:
        env, terminals = generate_scenario(spec)
        s = modules_for_theta(theta, len(terminals))
        timings = Timings()
        prep = initial_forest(env, terminals, s, params, timings)
        trees: tuple[SteinerTree, ...] = prep.initial.trees
        row.update(
            s=len(trees),
            time_paths=timings.values["paths"],
            time_optimize=timings.values["optimize"],
            mean_tree_length=float(np.mean([t.total_length for t in trees])),
            mean_nodes=float(np.mean([len(t.nodes) for t in trees])),
            error="",
        )
    except ObSteinerError as exc:
        row.update(s="", time_paths="", time_optimize="", mean_tree_length="", mean_nodes="", error=type(exc).__name__)
    row["time_total"] = (time.perf_counter() - t0) * 1e3
    return {k: row[k] for k in BENCH_COLUMNS}


def bench(seeds: Sequence[int], thetas: Sequence[float], spec: ScenarioSpec = ScenarioSpec(),
          params: BundleParams = BundleParams()) -> list[dict]:
    return [bench_row(replace(spec, seed=seed), theta, params) for seed in seeds for theta in thetas]
