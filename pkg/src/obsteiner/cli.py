"""``obsteiner`` command line: mapgen, solve, landscape, bench, render."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from obsteiner import io
from obsteiner.errors import ObSteinerError, ValidationError
from obsteiner.mapgen import ScenarioSpec, generate_scenario
from obsteiner.pipeline import BENCH_COLUMNS, SolveConfig, bench_row, landscape, solve
from obsteiner.steiner import BundleParams

THETA_GRID = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    """``0,3,7`` or ranges like ``0-49``."""
    out: list[int] = []
    try:
        for part in text.split(","):
            if "-" in part.strip()[1:]:
                lo, hi = part.rsplit("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif part.strip():
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers or ranges, got {text!r}") from None
    return out


def _add_scenario(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", type=Path, help="map JSON file (otherwise a map is generated)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=100, help="number of terminals")
    p.add_argument("--obstacles", type=int, default=5)
    p.add_argument("--edges", type=int, default=7, help="edges per obstacle")
    p.add_argument("--side", type=float, default=200.0)


def _add_solver(p: argparse.ArgumentParser, wd: float) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--theta", type=float)
    g.add_argument("--modules", type=int)
    p.add_argument("--wd", type=float, default=wd)
    p.add_argument("--np", type=int, default=20, dest="n_points", help="resampled points per path")
    p.add_argument("--linkage", choices=("complete", "single"), default="complete")


def _scenario(args) -> tuple:
    if args.map is not None:
        doc = io.load(args.map)
        env, terminals = io.map_from_dict(doc)
        return env, terminals, {"map": str(args.map)}
    spec = ScenarioSpec(args.seed, args.side, args.obstacles, args.edges, args.nodes)
    env, terminals = generate_scenario(spec)
    return env, terminals, asdict(spec)


def _write_csv(rows: Sequence[dict], columns: Sequence[str], out: Path | None) -> None:
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if out:
            fh.close()


def _emit_json(doc, out: Path | None) -> None:
    if out:
        io.save(doc, out)
    else:
        sys.stdout.write(io.dumps(doc))


def cmd_mapgen(args) -> None:
    seeds = range(args.seed, args.seed + args.batch) if args.batch else [args.seed]
    if args.batch:
        if args.out is None:
            raise ValidationError("--batch needs --out pointing at a directory")
        args.out.mkdir(parents=True, exist_ok=True)
    for seed in seeds:
        spec = ScenarioSpec(seed, args.side, args.obstacles, args.edges, args.nodes)
        env, terminals = generate_scenario(spec)
        doc = io.map_to_dict(env, terminals)
        target = args.out / f"map_{seed:04d}.json" if args.batch else args.out
        _emit_json(doc, target)


def _config(args, w_l: float) -> SolveConfig:
    if args.theta is None and args.modules is None:
        args.theta = 0.25
    return SolveConfig(args.theta, args.modules, w_l, args.wd, args.n_points, getattr(args, "policy", "argmin"),
                       args.linkage)


def cmd_solve(args) -> None:
    env, terminals, echo = _scenario(args)
    result = solve(env, terminals, _config(args, args.wl))
    doc = io.result_document(result, echo)
    _emit_json(doc, args.out)
    if args.svg:
        from obsteiner.svg import render_svg

        args.svg.write_text(render_svg(env, result.best, terminals))


def cmd_landscape(args) -> None:
    env, terminals, echo = _scenario(args)
    cfg = _config(args, 1.0)
    s = cfg.initial_s(len(terminals))
    _, traces = landscape(env, terminals, s, args.wl, args.wd, cfg.bundle)
    rows = [{"w_l": wl, **asdict(r)} for wl in args.wl for r in traces[wl].records]
    _write_csv(rows, ("w_l", "step", "s", "L_t", "L_d", "F"), args.out)
    if args.json:
        io.save(
            {
                "scenario": echo,
                "w_d": args.wd,
                "initial_s": s,
                "traces": {repr(wl): io.trace_to_list(traces[wl]) for wl in args.wl},
                "argmin": {repr(wl): traces[wl].argmin() for wl in args.wl},
            },
            args.json,
        )
    if args.figure:
        from obsteiner.plotting import plot_landscape

        plot_landscape(traces, args.figure, title=f"$w_d$={args.wd:g}, s={s}")


def _bench_job(job: tuple[ScenarioSpec, float, BundleParams]) -> dict:
    return bench_row(*job)


def cmd_bench(args) -> None:
    params = BundleParams(n_points=args.n_points, linkage=args.linkage)
    jobs = [
        (ScenarioSpec(seed, args.side, args.obstacles, args.edges, args.nodes), theta, params)
        for seed in args.seeds
        for theta in args.thetas
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_bench_job, jobs))
    else:
        rows = [_bench_job(j) for j in jobs]
    rows.sort(key=lambda r: (r["seed"], r["theta"]))
    _write_csv(rows, BENCH_COLUMNS, args.out)
    if args.figure:
        from obsteiner.plotting import plot_bench

        plot_bench(rows, args.figure)


def cmd_render(args) -> None:
    from obsteiner.svg import render_svg

    doc = io.load(args.result)
    problems = io.validate_document(doc)
    if problems:
        raise ValidationError("result document failed validation: " + "; ".join(problems[:5]))
    sc = doc["scenario"]
    env, terminals = io.map_from_dict({k: sc[k] for k in ("side", "obstacles", "terminals")})
    forest = io.forest_from_dict(doc["initial_forest" if args.initial else "forest"])
    svg = render_svg(env, forest, terminals)
    if args.svg:
        args.svg.write_text(svg)
    else:
        sys.stdout.write(svg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obsteiner", description="Obstacle-avoiding multi Steiner trees.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mapgen", help="generate a random map with terminals")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=100)
    p.add_argument("--obstacles", type=int, default=5)
    p.add_argument("--edges", type=int, default=7)
    p.add_argument("--side", type=float, default=200.0)
    p.add_argument("--batch", type=int, default=0, help="write maps for seeds seed..seed+batch-1 into --out")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_mapgen)

    p = sub.add_parser("solve", help="build the forest for one scenario")
    _add_scenario(p)
    _add_solver(p, 0.0)
    p.add_argument("--wl", type=float, default=1.0)
    p.add_argument("--policy", default="argmin", help="argmin or early_stop[:k[:eps]]")
    p.add_argument("--out", type=Path)
    p.add_argument("--svg", type=Path)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("landscape", help="cost trace over all merges for several w_l")
    _add_scenario(p)
    _add_solver(p, 0.5)
    p.add_argument("--wl", type=_floats, default=[0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 12.0])
    p.add_argument("--out", type=Path, help="CSV trace table")
    p.add_argument("--json", type=Path, help="plot-ready JSON")
    p.add_argument("--figure", type=Path, help="PNG of F against step")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("bench", help="timing and size sweep over seeds and theta")
    p.add_argument("--seeds", type=_ints, default=list(range(10)))
    p.add_argument("--thetas", type=_floats, default=list(THETA_GRID))
    p.add_argument("--nodes", type=int, default=100)
    p.add_argument("--obstacles", type=int, default=5)
    p.add_argument("--edges", type=int, default=7)
    p.add_argument("--side", type=float, default=200.0)
    p.add_argument("--np", type=int, default=20, dest="n_points")
    p.add_argument("--linkage", choices=("complete", "single"), default="complete")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, help="CSV file")
    p.add_argument("--figure", type=Path, help="PNG with time, length and node panels")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="SVG from a saved result document")
    p.add_argument("result", type=Path)
    p.add_argument("--svg", type=Path)
    p.add_argument("--initial", action="store_true", help="draw the forest before concatenation")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ObSteinerError as exc:
        print(f"obsteiner: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"obsteiner: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
