"""Seeded scenario generation: star-shaped obstacles and free-space terminals.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence(seed, spawn_key=(stream,))``; stream 0 draws obstacles,
stream 1 draws terminals, so the two never share state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from shapely.geometry import Polygon as ShapelyPolygon

from obsteiner.errors import GenerationError, ValidationError
from obsteiner.geometry import MapEnv, Point2, Polygon

OBSTACLE_STREAM = 0
TERMINAL_STREAM = 1
RADIUS_RANGE = (0.05, 0.15)
GAP = 0.01
MAX_OBSTACLE_TRIES = 10_000
MAX_TERMINAL_DRAWS = 1_000_000
MIN_SEPARATION = 1e-3


def rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream,))))


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 0
    side: float = 200.0
    n_obstacles: int = 5
    obstacle_edges: int = 7
    n_terminals: int = 100

    def __post_init__(self) -> None:
        if self.n_obstacles < 0 or self.n_terminals < 0:
            raise ValidationError("counts must be >= 0")
        if self.obstacle_edges < 3:
            raise ValidationError("obstacles need at least 3 edges")
        if not self.side > 0:
            raise ValidationError("side must be > 0")


def _star_polygon(rng: np.random.Generator, side: float, n_edges: int) -> list[Point2]:
    radii = rng.uniform(RADIUS_RANGE[0] * side, RADIUS_RANGE[1] * side, n_edges)
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, n_edges))
    margin = radii.max() + GAP * side
    cx, cy = rng.uniform(margin, side - margin, 2)
    return [(float(cx + r * math.cos(a)), float(cy + r * math.sin(a))) for r, a in zip(radii, angles)]


def generate_map(spec: ScenarioSpec) -> MapEnv:
    """Non-overlapping star-shaped obstacles placed by rejection sampling."""
    rng = rng_for(spec.seed, OBSTACLE_STREAM)
    gap = GAP * spec.side
    placed: list[Polygon] = []
    shapes: list[ShapelyPolygon] = []
    for k in range(spec.n_obstacles):
        for _ in range(MAX_OBSTACLE_TRIES):
            verts = _star_polygon(rng, spec.side, spec.obstacle_edges)
            shp = ShapelyPolygon(verts)
            if not shp.is_valid or any(shp.distance(o) < gap for o in shapes):
                continue
            try:
                poly = Polygon(tuple(verts))
            except ValidationError:
                continue
            placed.append(poly)
            shapes.append(shp)
            break
        else:
            raise GenerationError(f"could not place obstacle {k} after {MAX_OBSTACLE_TRIES} tries")
    return MapEnv(spec.side, tuple(placed))


def generate_terminals(env: MapEnv, n: int, seed: int) -> list[Point2]:
    """``n`` points uniform over free space, pairwise at least ``1e-3 * side`` apart."""
    rng = rng_for(seed, TERMINAL_STREAM)
    sep = MIN_SEPARATION * env.side
    out: list[Point2] = []
    cells: dict[tuple[int, int], list[Point2]] = {}
    draws = 0
    while len(out) < n:
        if draws >= MAX_TERMINAL_DRAWS:
            raise GenerationError(f"placed only {len(out)} of {n} terminals after {draws} draws")
        draws += 1
        x, y = rng.uniform(0.0, env.side, 2)
        p = (float(x), float(y))
        if not env.is_free(p):
            continue
        cx, cy = int(p[0] // sep), int(p[1] // sep)
        near = (q for i in (-1, 0, 1) for j in (-1, 0, 1) for q in cells.get((cx + i, cy + j), ()))
        if any(math.hypot(p[0] - q[0], p[1] - q[1]) < sep for q in near):
            continue
        cells.setdefault((cx, cy), []).append(p)
        out.append(p)
    return out


def generate_scenario(spec: ScenarioSpec) -> tuple[MapEnv, list[Point2]]:
    env = generate_map(spec)
    return env, generate_terminals(env, spec.n_terminals, spec.seed)
