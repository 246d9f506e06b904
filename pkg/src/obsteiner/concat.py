"""Dendrogram-guided concatenation of module trees and the weighted forest cost."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Literal, Sequence

from obsteiner.clustering import Dendrogram
from obsteiner.errors import ValidationError
from obsteiner.geometry import FreeSpaceTriangulation, MapEnv
from obsteiner.steiner import BundleParams, Module, SteinerTree, build_tree, select_root
from obsteiner.visibility import GeodesicRouter


@dataclass(frozen=True)
class Weights:
    w_l: float = 1.0
    w_d: float = 0.0

    def __post_init__(self) -> None:
        if self.w_l < 0 or self.w_d < 0:
            raise ValidationError("weights must be non-negative")
        if self.w_l == 0 and self.w_d == 0:
            raise ValidationError("weights must not both be zero")


@dataclass(frozen=True)
class Forest:
    trees: tuple[SteinerTree, ...]
    step: int = 0

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for t in self.trees:
            ids = set(t.terminal_ids)
            if ids & seen:
                raise ValidationError("forest trees share terminals")
            seen |= ids

    @property
    def module_map(self) -> dict[int, int]:
        return {tid: k for k, t in enumerate(self.trees) for tid in t.terminal_ids}

    @property
    def s(self) -> int:
        return len(self.trees)


@dataclass(frozen=True)
class CostRecord:
    step: int
    s: int
    L_t: float
    L_d: float
    F: float


@dataclass
class CostTrace:
    records: list[CostRecord] = field(default_factory=list)

    def append(self, rec: CostRecord) -> None:
        if self.records:
            last = self.records[-1]
            if rec.step <= last.step or rec.s != last.s - 1:
                raise ValidationError("trace steps must increase and drop one module per step")
        self.records.append(rec)

    def argmin(self) -> int:
        """Index of the first record with minimal F."""
        return min(range(len(self.records)), key=lambda i: (self.records[i].F, i))

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Policy:
    kind: Literal["argmin", "early_stop"] = "argmin"
    k: int = 2
    eps: float = 1e-3

    @classmethod
    def parse(cls, text: str) -> Policy:
        """``argmin`` or ``early_stop[:k[:eps]]``."""
        parts = text.split(":")
        if parts[0] == "argmin" and len(parts) == 1:
            return cls("argmin")
        if parts[0] == "early_stop" and len(parts) <= 3:
            k = int(parts[1]) if len(parts) > 1 else 2
            eps = float(parts[2]) if len(parts) > 2 else 1e-3
            return cls("early_stop", k, eps)
        raise ValidationError(f"unknown policy {text!r}")


def root_distance_sum(trees: Sequence[SteinerTree]) -> float:
    roots = [t.root.point for t in trees]
    return sum(math.dist(a, b) for a, b in itertools.combinations(roots, 2))


def cost(f: Forest, w: Weights) -> tuple[float, float, float]:
    """(F, L_t, L_d) with F = w_l * L_t + w_d * L_d."""
    L_t = sum(t.total_length for t in f.trees)
    L_d = root_distance_sum(f.trees)
    return w.w_l * L_t + w.w_d * L_d, L_t, L_d


def merged_module(ti: SteinerTree, tj: SteinerTree, module_id: int, params: BundleParams = BundleParams(),
                  router: GeodesicRouter | None = None) -> Module:
    a = {n.terminal_id: n.point for n in ti.nodes if n.kind != "steiner"}
    b = {n.terminal_id: n.point for n in tj.nodes if n.kind != "steiner"}
    if a.keys() & b.keys():
        raise ValidationError("trees to concatenate share terminals")
    pts = {**a, **b}
    ids = tuple(sorted(pts))
    terms = tuple(pts[i] for i in ids)
    root = select_root(terms, params.root_metric, router)
    return Module(module_id, terms, root, ids)


def concat_trees(
    ti: SteinerTree,
    tj: SteinerTree,
    env: MapEnv,
    tri: FreeSpaceTriangulation,
    params: BundleParams = BundleParams(),
    router: GeodesicRouter | None = None,
    module_id: int | None = None,
) -> SteinerTree:
    """Tree over the union of both trees' terminals.

    Geodesics already in ``router``'s cache are reused. The previous
    Steiner points seed one build; bundling is greedy, so a seeded build can
    drift into a longer tree, and a cold build is kept whenever it is
    strictly shorter.
    """
    router = router or GeodesicRouter(env)
    mid = module_id if module_id is not None else min(ti.module_id, tj.module_id)
    m = merged_module(ti, tj, mid, params, router)
    warm = ti.steiner_points + tj.steiner_points
    seeded = build_tree(m, env, tri, params, router, warm)
    if not warm:
        return seeded
    cold = build_tree(m, env, tri, params, router)
    return cold if cold.total_length < seeded.total_length else seeded


def concatenation_steps(
    initial: Forest,
    z: Dendrogram,
    env: MapEnv,
    tri: FreeSpaceTriangulation,
    params: BundleParams = BundleParams(),
    router: GeodesicRouter | None = None,
) -> Iterator[Forest]:
    """Yield the initial forest and then the forest after each merge of ``z``."""
    if z.n_leaves != initial.s:
        raise ValidationError(f"dendrogram has {z.n_leaves} leaves for {initial.s} trees")
    router = router or GeodesicRouter(env)
    active: dict[int, SteinerTree] = dict(enumerate(initial.trees))
    yield initial
    n = z.n_leaves
    for k, mg in enumerate(z.merges):
        ti, tj = active.pop(mg.left), active.pop(mg.right)
        active[n + k] = concat_trees(ti, tj, env, tri, params, router, module_id=n + k)
        trees = sorted(active.values(), key=lambda t: min(t.terminal_ids))
        yield Forest(tuple(trees), initial.step + k + 1)


def run_concatenation(
    initial: Forest,
    z: Dendrogram,
    w: Weights,
    policy: Policy = Policy(),
    *,
    env: MapEnv,
    tri: FreeSpaceTriangulation,
    params: BundleParams = BundleParams(),
    router: GeodesicRouter | None = None,
) -> tuple[Forest, CostTrace]:
    """Merge bottom-up along ``z``, tracing cost; return the best forest seen."""
    trace = CostTrace()
    best: Forest | None = None
    best_F = math.inf
    flat = 0
    for forest in concatenation_steps(initial, z, env, tri, params, router):
        F, L_t, L_d = cost(forest, w)
        prev = trace.records[-1].F if trace.records else None
        trace.append(CostRecord(forest.step, forest.s, L_t, L_d, F))
        if F < best_F:
            best, best_F = forest, F
        if policy.kind == "early_stop" and prev is not None:
            rel = (prev - F) / abs(prev) if prev != 0 else 0.0
            flat = flat + 1 if rel < policy.eps else 0
            if flat >= policy.k:
                break
    assert best is not None
    return best, trace


def trace_for(forests: Sequence[Forest], w: Weights) -> CostTrace:
    """Cost trace of an already computed forest sequence under other weights."""
    trace = CostTrace()
    for f in forests:
        F, L_t, L_d = cost(f, w)
        trace.append(CostRecord(f.step, f.s, L_t, L_d, F))
    return trace
