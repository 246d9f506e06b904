"""JSON persistence for maps and result documents."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

import jsonschema

from obsteiner.concat import CostRecord, CostTrace, Forest, Weights, cost
from obsteiner.errors import ValidationError
from obsteiner.geometry import MapEnv, Point2, Polygon
from obsteiner.steiner import SteinerTree, TreeEdge, TreeNode, tree_violations
from obsteiner.visibility import GeodesicPath

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

MAP_SCHEMA = {
    "type": "object",
    "required": ["side", "obstacles", "terminals"],
    "properties": {
        "side": {"type": "number", "exclusiveMinimum": 0},
        "obstacles": {"type": "array", "items": {"type": "array", "items": _POINT, "minItems": 3}},
        "terminals": {"type": "array", "items": _POINT},
    },
}

RESULT_SCHEMA = {
    "type": "object",
    "required": ["scenario", "config", "forest", "trace", "timings_ms"],
    "properties": {
        "scenario": MAP_SCHEMA,
        "trace": {
            "type": "array",
            "items": {"type": "object", "required": ["step", "s", "L_t", "L_d", "F"]},
        },
        "forest": {"type": "object", "required": ["step", "trees"]},
    },
}


def _pt(p: Point2) -> list[float]:
    return [float(p[0]), float(p[1])]


def map_to_dict(env: MapEnv, terminals: Sequence[Point2] = ()) -> dict[str, Any]:
    return {
        "side": env.side,
        "obstacles": [[_pt(v) for v in o.vertices] for o in env.obstacles],
        "terminals": [_pt(p) for p in terminals],
    }


def map_from_dict(doc: dict[str, Any]) -> tuple[MapEnv, list[Point2]]:
    try:
        jsonschema.validate(doc, MAP_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"invalid map document: {exc.message}") from None
    env = MapEnv(doc["side"], tuple(Polygon(tuple(tuple(v) for v in o)) for o in doc["obstacles"]))
    return env, [(float(x), float(y)) for x, y in doc["terminals"]]


def tree_to_dict(tree: SteinerTree) -> dict[str, Any]:
    return {
        "module_id": tree.module_id,
        "total_length": tree.total_length,
        "nodes": [
            {"x": n.point[0], "y": n.point[1], "kind": n.kind, "terminal": n.terminal_id} for n in tree.nodes
        ],
        "edges": [
            {"a": e.a, "b": e.b, "length": e.path.length, "waypoints": [_pt(w) for w in e.path.waypoints]}
            for e in tree.edges
        ],
    }


def tree_from_dict(doc: dict[str, Any]) -> SteinerTree:
    nodes = tuple(TreeNode((n["x"], n["y"]), n["kind"], n["terminal"]) for n in doc["nodes"])
    edges = tuple(
        TreeEdge(e["a"], e["b"], GeodesicPath(tuple(tuple(w) for w in e["waypoints"]))) for e in doc["edges"]
    )
    return SteinerTree(nodes, edges, doc["module_id"])


def forest_to_dict(f: Forest) -> dict[str, Any]:
    return {"step": f.step, "trees": [tree_to_dict(t) for t in f.trees]}


def forest_from_dict(doc: dict[str, Any]) -> Forest:
    return Forest(tuple(tree_from_dict(t) for t in doc["trees"]), doc["step"])


def trace_to_list(trace: CostTrace) -> list[dict[str, Any]]:
    return [{"step": r.step, "s": r.s, "L_t": r.L_t, "L_d": r.L_d, "F": r.F} for r in trace.records]


def trace_from_list(rows: list[dict[str, Any]]) -> CostTrace:
    trace = CostTrace()
    for r in rows:
        trace.append(CostRecord(r["step"], r["s"], r["L_t"], r["L_d"], r["F"]))
    return trace


def result_document(result, scenario_spec: dict[str, Any] | None = None) -> dict[str, Any]:
    """Self-contained record of a solve run; ``timings_ms`` is the only non-deterministic field."""
    cfg = result.config
    return {
        "scenario": {**map_to_dict(result.env, result.terminals), "spec": scenario_spec},
        "config": {
            "theta": cfg.theta,
            "modules": cfg.modules,
            "w_l": cfg.w_l,
            "w_d": cfg.w_d,
            "np": cfg.n_points,
            "policy": cfg.policy,
            "linkage": cfg.linkage,
        },
        "initial_forest": forest_to_dict(result.initial),
        "forest": forest_to_dict(result.best),
        "trace": trace_to_list(result.trace),
        "timings_ms": dict(result.timings),
    }


def validate_document(doc: dict[str, Any]) -> list[str]:
    """Re-check every tree invariant and the traced cost from the document alone."""
    try:
        jsonschema.validate(doc, RESULT_SCHEMA)
    except jsonschema.ValidationError as exc:
        return [f"schema: {exc.message}"]
    env, terminals = map_from_dict({k: doc["scenario"][k] for k in ("side", "obstacles", "terminals")})
    problems = []
    forest = forest_from_dict(doc["forest"])
    seen: list[int] = []
    for k, t in enumerate(forest.trees):
        problems += [f"tree {k}: {msg}" for msg in tree_violations(t, env)]
        for n in t.nodes:
            if n.kind != "steiner" and tuple(terminals[n.terminal_id]) != n.point:
                problems.append(f"tree {k}: terminal {n.terminal_id} moved")
        seen += t.terminal_ids
    if sorted(seen) != list(range(len(terminals))):
        problems.append("forest does not partition the terminals")
    cfg = doc["config"]
    F, _, _ = cost(forest, Weights(cfg["w_l"], cfg["w_d"]))
    traced = next((r["F"] for r in doc["trace"] if r["step"] == forest.step), None)
    if traced is None or abs(F - traced) > 1e-9 * max(1.0, abs(traced)):
        problems.append(f"forest cost {F} does not match trace {traced}")
    return problems


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=1) + "\n"


def save(doc: Any, path: str | Path) -> None:
    Path(path).write_text(dumps(doc))


def load(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())
