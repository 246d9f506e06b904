"""SVG drawing of a forest over its map."""

from __future__ import annotations

from typing import Sequence
from xml.etree import ElementTree as ET

from obsteiner.concat import Forest
from obsteiner.geometry import MapEnv, Point2

# tab10
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _coords(pts) -> str:
    return " ".join(f"{x!r},{y!r}" for x, y in pts)


def render_svg(env: MapEnv, forest: Forest, terminals: Sequence[Point2] = (), size: int = 800) -> str:
    """Obstacles filled grey, one ``<g class="tree">`` of polylines per tree.

    Terminals are small discs, roots larger discs in the tree colour and
    Steiner points small hollow circles. The y axis points up.
    """
    side = env.side
    root = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(size),
        height=str(size),
        viewBox=f"0 0 {side!r} {side!r}",
    )
    canvas = ET.SubElement(root, "g", transform=f"matrix(1 0 0 -1 0 {side!r})")
    ET.SubElement(canvas, "rect", x="0", y="0", width=repr(side), height=repr(side), fill="white", stroke="black",
                  **{"stroke-width": repr(side * 0.002)})
    obs = ET.SubElement(canvas, "g", {"class": "obstacles", "fill": "#b0b0b0", "stroke": "#606060"})
    for poly in env.obstacles:
        ET.SubElement(obs, "polygon", points=_coords(poly.vertices))
    r_small, r_big, lw = side * 0.004, side * 0.009, side * 0.0025
    for k, tree in enumerate(forest.trees):
        color = PALETTE[k % len(PALETTE)]
        g = ET.SubElement(canvas, "g", {"class": "tree", "id": f"tree-{k}", "stroke": color, "fill": "none",
                                        "stroke-width": repr(lw)})
        for e in tree.edges:
            ET.SubElement(g, "polyline", points=_coords(e.path.waypoints))
        for node in tree.nodes:
            x, y = map(repr, node.point)
            if node.kind == "root":
                ET.SubElement(g, "circle", cx=x, cy=y, r=repr(r_big), fill=color, stroke="black")
            elif node.kind == "terminal":
                ET.SubElement(g, "circle", cx=x, cy=y, r=repr(r_small), fill="black", stroke="none")
            else:
                ET.SubElement(g, "circle", cx=x, cy=y, r=repr(r_small), fill="white")
    loose = {n.point for t in forest.trees for n in t.nodes}
    extra = [p for p in terminals if tuple(p) not in loose]
    if extra:
        g = ET.SubElement(canvas, "g", {"class": "terminals", "fill": "black"})
        for x, y in extra:
            ET.SubElement(g, "circle", cx=repr(x), cy=repr(y), r=repr(r_small))
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"
