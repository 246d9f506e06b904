from __future__ import annotations

import functools

import pytest

from obsteiner.geometry import MapEnv, Polygon
from obsteiner.mapgen import ScenarioSpec, generate_scenario


def square(x0: float, y0: float, w: float) -> Polygon:
    return Polygon(((x0, y0), (x0 + w, y0), (x0 + w, y0 + w), (x0, y0 + w)))


@functools.lru_cache(maxsize=None)
def scenario(seed: int, n_terminals: int = 100, n_obstacles: int = 5):
    return generate_scenario(ScenarioSpec(seed=seed, n_terminals=n_terminals, n_obstacles=n_obstacles))


@pytest.fixture
def empty_env() -> MapEnv:
    return MapEnv(100.0, ())


@pytest.fixture
def box_env() -> MapEnv:
    """A 20x20 square obstacle in the middle of a 100 map."""
    return MapEnv(100.0, (square(40.0, 40.0, 20.0),))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
