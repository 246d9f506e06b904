"""Matplotlib figures for cost landscapes and benchmark sweeps."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from obsteiner.concat import CostTrace  # noqa: E402


def use_defaults() -> None:
    plt.rcParams.update(
        {
            "figure.figsize": (6.0, 4.0),
            "figure.dpi": 120,
            "savefig.dpi": 200,
            "savefig.bbox": "tight",
            "font.size": 9,
            "axes.grid": True,
            "grid.alpha": 0.3,
            "axes.spines.top": False,
            "axes.spines.right": False,
            "legend.frameon": False,
        }
    )


def plot_landscape(traces: Mapping[float, CostTrace], path: str | Path, title: str | None = None) -> None:
    """F against concatenation step, one line per ``w_l``; small weights blue, large red."""
    use_defaults()
    fig, ax = plt.subplots()
    keys = sorted(traces)
    cmap = plt.get_cmap("coolwarm")
    for i, wl in enumerate(keys):
        tr = traces[wl]
        steps = [r.step for r in tr.records]
        F = [r.F for r in tr.records]
        c = cmap(i / max(1, len(keys) - 1))
        ax.plot(steps, F, color=c, lw=1.2, label=f"$w_l$={wl:g}")
        k = tr.argmin()
        ax.plot(steps[k], F[k], "o", color=c, ms=4)
    ax.set_xlabel("concatenation step")
    ax.set_ylabel("F")
    ax.set_yscale("log")
    if title:
        ax.set_title(title)
    ax.legend(ncol=2, fontsize=7)
    fig.savefig(path)
    plt.close(fig)


def _by_theta(rows: Sequence[Mapping], key: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    groups: dict[float, list[float]] = defaultdict(list)
    for r in rows:
        if not r.get("error") and r[key] != "":
            groups[float(r["theta"])].append(float(r[key]))
    th = np.array(sorted(groups))
    mean = np.array([np.mean(groups[t]) for t in th])
    std = np.array([np.std(groups[t]) for t in th])
    return th, mean, std


def plot_bench(rows: Sequence[Mapping], path: str | Path) -> None:
    """Three panels against theta: time, mean tree length, mean nodes per tree."""
    use_defaults()
    fig, axes = plt.subplots(1, 3, figsize=(11.0, 3.2))
    panels = (
        ("time_total", "time per scenario [ms]"),
        ("mean_tree_length", "mean tree length"),
        ("mean_nodes", "mean nodes per tree"),
    )
    for ax, (key, label) in zip(axes, panels):
        th, mean, std = _by_theta(rows, key)
        ax.errorbar(th, mean, yerr=std, fmt="o-", ms=3, lw=1, capsize=2)
        ax.set_xlabel(r"$\theta$")
        ax.set_ylabel(label)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
