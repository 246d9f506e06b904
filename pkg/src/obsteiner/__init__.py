"""Obstacle-avoiding multi-Euclidean Steiner trees in the plane.

Terminals are clustered hierarchically, each cluster is served by a tree
grown from bundled root-to-terminal geodesics, and trees are concatenated
bottom-up along the terminal dendrogram while a weighted cost is traced.
"""

from obsteiner.errors import GenerationError, NoCandidateError, NoPathError, ValidationError
from obsteiner.geometry import MapEnv, Polygon, triangulate_free_space
from obsteiner.mapgen import ScenarioSpec, generate_map, generate_terminals
from obsteiner.pipeline import SolveConfig, solve

__all__ = [
    "GenerationError",
    "MapEnv",
    "NoCandidateError",
    "NoPathError",
    "Polygon",
    "ScenarioSpec",
    "SolveConfig",
    "ValidationError",
    "generate_map",
    "generate_terminals",
    "solve",
    "triangulate_free_space",
]

__version__ = "0.1.0"
