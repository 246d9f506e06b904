"""Agglomerative clustering, dendrogram cuts and the bundled-path similarity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Literal, Sequence

import numpy as np

from obsteiner.errors import ValidationError
from obsteiner.geometry import Point2
from obsteiner.visibility import GeodesicPath, resample_path

Linkage = Literal["complete", "single"]

DEFAULT_NP = 20


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float


@dataclass(frozen=True)
class Dendrogram:
    """Binary merge tree. Node ids ``0..n-1`` are leaves, merge ``k`` creates node ``n + k``."""

    leaves: tuple[Hashable, ...]
    merges: tuple[Merge, ...]

    def __post_init__(self) -> None:
        n = len(self.leaves)
        if len(self.merges) != max(n - 1, 0):
            raise ValidationError(f"{n} leaves need {max(n - 1, 0)} merges, got {len(self.merges)}")
        used: set[int] = set()
        prev = -math.inf
        for k, m in enumerate(self.merges):
            for c in (m.left, m.right):
                if not 0 <= c < n + k or c in used:
                    raise ValidationError(f"merge {k} uses invalid or reused child {c}")
                used.add(c)
            if m.height < prev:
                raise ValidationError("merge heights must be non-decreasing")
            prev = m.height

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    def members(self, node: int) -> list[int]:
        """Leaf positions under ``node``."""
        n = self.n_leaves
        out, stack = [], [node]
        while stack:
            u = stack.pop()
            if u < n:
                out.append(u)
            else:
                m = self.merges[u - n]
                stack.extend((m.right, m.left))
        return sorted(out)


@dataclass(frozen=True)
class PathMetricParams:
    n_points: int = DEFAULT_NP

    def __post_init__(self) -> None:
        if self.n_points < 2:
            raise ValidationError(f"NP must be >= 2, got {self.n_points}")


def _as_matrix(n: int, dist) -> np.ndarray:
    if callable(dist):
        d = np.array([[dist(i, j) if i != j else 0.0 for j in range(n)] for i in range(n)], dtype=np.float64)
    else:
        d = np.array(dist, dtype=np.float64)
    if d.shape != (n, n):
        raise ValidationError(f"distance matrix must be {n}x{n}, got {d.shape}")
    if not np.all(np.isfinite(d)):
        raise ValidationError("distance matrix has non-finite entries")
    if np.any(d < 0):
        raise ValidationError("negative distance")
    if np.any(np.diag(d) != 0):
        raise ValidationError("distance must be zero on the diagonal")
    if not np.allclose(d, d.T, rtol=1e-12, atol=0.0):
        raise ValidationError("distance is not symmetric")
    return d


def agglomerate(
    items: Sequence[Hashable],
    dist: Callable[[int, int], float] | np.ndarray,
    linkage: Linkage = "complete",
) -> Dendrogram:
    """Agglomerative clustering under complete or single linkage.

    ``dist`` is an ``n x n`` matrix or a callable on item positions. Exact
    ties merge the pair with the smallest node ids first.
    """
    items = tuple(items)
    n = len(items)
    if n == 0:
        raise ValidationError("cannot cluster zero items")
    if linkage not in ("complete", "single"):
        raise ValidationError(f"unsupported linkage {linkage!r}")
    d0 = _as_matrix(n, dist)
    if n == 1:
        return Dendrogram(items, ())
    size = 2 * n - 1
    D = np.full((size, size), np.inf)
    D[:n, :n] = d0
    np.fill_diagonal(D, np.inf)
    combine = np.maximum if linkage == "complete" else np.minimum
    merges = []
    for k in range(n - 1):
        flat = int(np.argmin(D))
        i, j = divmod(flat, size)
        if i > j:
            i, j = j, i
        h = float(D[i, j])
        new = n + k
        row = combine(D[i], D[j])
        D[[i, j], :] = np.inf
        D[:, [i, j]] = np.inf
        row[[i, j]] = np.inf
        row[new] = np.inf
        alive = np.isfinite(row)
        D[new, alive] = row[alive]
        D[alive, new] = row[alive]
        merges.append(Merge(i, j, h))
    return Dendrogram(items, tuple(merges))


@dataclass(frozen=True)
class ClusterCut:
    """``assignment[k]`` is the 1-based module id of leaf position ``k``."""

    assignment: tuple[int, ...]
    n_modules: int
    n_merges: int  # length of the merge prefix applied by the cut

    def modules(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_modules)]
        for leaf, m in enumerate(self.assignment):
            out[m - 1].append(leaf)
        return out


def cut_to_modules(z: Dendrogram, s: int) -> ClusterCut:
    """Cut at the smallest height that leaves ``s`` or fewer modules."""
    if s < 1:
        raise ValidationError(f"module count must be >= 1, got {s}")
    n = z.n_leaves
    if s >= n:
        applied = 0
    else:
        h = z.merges[n - s - 1].height
        applied = n - s
        while applied < len(z.merges) and z.merges[applied].height <= h:
            applied += 1
    parent = list(range(n + applied))

    def find(u: int) -> int:
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for k in range(applied):
        m = z.merges[k]
        parent[find(m.left)] = n + k
        parent[find(m.right)] = n + k
    labels: dict[int, int] = {}
    assignment = []
    for leaf in range(n):
        r = find(leaf)
        if r not in labels:
            labels[r] = len(labels) + 1
        assignment.append(labels[r])
    return ClusterCut(tuple(assignment), len(labels), applied)


def module_dendrogram(z: Dendrogram, cut: ClusterCut) -> Dendrogram:
    """The merges of ``z`` above ``cut``, expressed over module ids (leaf k = module k + 1)."""
    n = z.n_leaves
    node_module: dict[int, int] = {leaf: cut.assignment[leaf] - 1 for leaf in range(n)}
    for k in range(cut.n_merges):
        m = z.merges[k]
        node_module[n + k] = node_module[m.left]
    merges = []
    s = cut.n_modules
    node_id = dict(node_module)
    for t, k in enumerate(range(cut.n_merges, len(z.merges))):
        m = z.merges[k]
        merges.append(Merge(node_id[m.left], node_id[m.right], m.height))
        node_id[n + k] = s + t
    return Dendrogram(tuple(range(1, s + 1)), tuple(merges))


def _direction(path: GeodesicPath, root: Point2) -> np.ndarray:
    a = np.subtract(path.target, root)
    if math.hypot(*a) == 0.0:
        raise ValidationError(f"terminal {path.target} coincides with the root")
    return a


def path_distance(u: GeodesicPath, v: GeodesicPath, root: Point2, params: PathMetricParams = PathMetricParams()) -> float:
    """Squared piecewise gap between resampled paths, scaled by the angle between their terminal directions."""
    a, b = _direction(u, root), _direction(v, root)
    pu, pv = resample_path(u, params.n_points), resample_path(v, params.n_points)
    gap = float(((pu - pv) ** 2).sum())
    cos = float(a @ b) / (math.hypot(*a) * math.hypot(*b))
    return gap * math.acos(min(1.0, max(-1.0, cos)))


def path_distance_matrix(
    paths: Sequence[GeodesicPath], root: Point2, params: PathMetricParams = PathMetricParams()
) -> np.ndarray:
    """Pairwise :func:`path_distance`, vectorised."""
    if not paths:
        return np.zeros((0, 0))
    dirs = np.array([_direction(p, root) for p in paths])
    unit = dirs / np.hypot(dirs[:, 0], dirs[:, 1])[:, None]
    samples = np.stack([resample_path(p, params.n_points) for p in paths])
    diff = samples[:, None, :, :] - samples[None, :, :, :]
    gap = (diff**2).sum(axis=(2, 3))
    angle = np.arccos(np.clip(unit @ unit.T, -1.0, 1.0))
    d = gap * angle
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d
