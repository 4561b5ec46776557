"""Deterministic SVG rendering of a classified lane grid.

Cell colors follow the class palette (free green, occupied brown, hidden red,
out-of-range black, safety orange, protected purple); the field of view is a
light-blue outline and the ego a blue marker. Re-rendering the same report
yields a byte-identical file.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

from .classify import SpaceClass
from .geometry import fov_polygon

if TYPE_CHECKING:
    from .pipeline import Report, Scenario

CLASS_COLORS = {
    SpaceClass.FREE: "green",
    SpaceClass.OCCUPIED: "brown",
    SpaceClass.HIDDEN: "red",
    SpaceClass.UNKNOWN: "black",
    SpaceClass.SAFETY: "orange",
    SpaceClass.PROTECTED: "purple",
}

_MARGIN = 5.0


def _fmt(x: float) -> str:
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def _points_attr(vertices) -> str:
    return " ".join(f"{_fmt(p.x)},{_fmt(-p.y)}" for p in vertices)


def render_svg(report: "Report", scenario: "Scenario") -> str:
    """Render one filled shape per cell plus FOV outline and ego marker.

    The y axis is flipped so the scene appears in conventional map
    orientation (y up).
    """
    ego = scenario.ego
    fov = fov_polygon(ego.position, scenario.sensor.range_m, scenario.sensor.arc_segments)
    xs, ys = [], []
    for r in report.cells:
        for p in r.cell.polygon.vertices:
            xs.append(p.x)
            ys.append(p.y)
    for p in fov.vertices:
        xs.append(p.x)
        ys.append(p.y)
    minx, maxx = min(xs) - _MARGIN, max(xs) + _MARGIN
    miny, maxy = min(ys) - _MARGIN, max(ys) + _MARGIN

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_fmt(minx)} {_fmt(-maxy)} {_fmt(maxx - minx)} {_fmt(maxy - miny)}">',
        f'<rect x="{_fmt(minx)}" y="{_fmt(-maxy)}" width="{_fmt(maxx - minx)}" '
        f'height="{_fmt(maxy - miny)}" fill="white"/>',
    ]
    for r in report.cells:
        color = CLASS_COLORS[r.label]
        lines.append(f'<polygon points="{_points_attr(r.cell.polygon.vertices)}" '
                     f'fill="{color}" stroke="white" stroke-width="0.05"/>')
    lines.append(f'<polygon points="{_points_attr(fov.vertices)}" '
                 f'fill="none" stroke="lightblue" stroke-width="0.5"/>')
    hx = ego.position.x + 2.5 * math.cos(ego.heading)
    hy = ego.position.y + 2.5 * math.sin(ego.heading)
    lines.append(f'<circle cx="{_fmt(ego.position.x)}" cy="{_fmt(-ego.position.y)}" '
                 f'r="1.2" fill="blue"/>')
    lines.append(f'<line x1="{_fmt(ego.position.x)}" y1="{_fmt(-ego.position.y)}" '
                 f'x2="{_fmt(hx)}" y2="{_fmt(-hy)}" stroke="blue" stroke-width="0.5"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
