"""Deterministic SVG pictures of surfaces and leaf traces.

Every coordinate is computed as an exact rational and only rendered at
the last moment, truncated to twelve decimal places.  Identical inputs
therefore produce byte-identical files; diffing two renders is a real
regression test, not noise.

Layout: polygons are drawn left to right in index order, bottom-aligned,
in their own charts (gluings identify edges abstractly, so overlapping
polygon coordinates mean nothing and are not drawn overlapping).  Glued
edge pairs share a stroke color; vertices whose cone angle is not 2 pi
get a filled marker; traces are drawn as one polyline per flow segment,
since a leaf teleports when it crosses a gluing.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InvalidSurface
from .rational import rat_to_decimal
from .surface import LeafTrace, PlanarPoint, Surface, validate

_F = Fraction

SCALE = _F(160)
MARGIN = _F(1, 2)  # world units of padding around and between polygons

EDGE_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#17becf",
)
TRACE_PALETTE = ("#b91c1c", "#0e7490", "#7c2d12", "#4a044e")


class _Frame:
    """Exact world-to-page transform for one layout of polygons."""

    def __init__(self, surface: Surface):
        self.offx: list[Fraction] = []
        self.offy: list[Fraction] = []
        cursor = MARGIN
        tallest = _F(0)
        for poly in surface.polygons:
            xs = [v.x for v in poly.vertices]
            ys = [v.y for v in poly.vertices]
            self.offx.append(cursor - min(xs))
            self.offy.append(-min(ys))
            cursor += max(xs) - min(xs) + MARGIN
            tallest = max(tallest, max(ys) - min(ys))
        self.width = cursor * SCALE
        self.height = (tallest + 2 * MARGIN) * SCALE
        self._top = tallest + MARGIN

    def page(self, polygon: int, p: PlanarPoint) -> tuple[str, str]:
        x = (p.x + self.offx[polygon]) * SCALE
        y = (self._top - (p.y + self.offy[polygon])) * SCALE
        return rat_to_decimal(x, 12), rat_to_decimal(y, 12)


def _segments(
    trace: LeafTrace,
) -> list[tuple[int, PlanarPoint, PlanarPoint]]:
    """Straight flow segments (polygon, from, to), teleports removed."""
    out = []
    polygon, at = trace.start_polygon, trace.start_point
    for ev in trace.events:
        if at != ev.point:
            out.append((polygon, at, ev.point))
        polygon, at = ev.to_polygon, ev.to_point
    if at != trace.end_point:
        out.append((polygon, at, trace.end_point))
    return out


def render_svg(
    surface: Surface,
    traces: list[LeafTrace] | tuple[LeafTrace, ...] = (),
    out_path: str | None = None,
) -> str:
    report = validate(surface)
    if not report.ok:
        raise InvalidSurface(
            f"refusing to render an invalid surface: {report.errors[0]}"
        )
    frame = _Frame(surface)
    w, h = rat_to_decimal(frame.width, 12), rat_to_decimal(frame.height, 12)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" '
        f'width="{w}" height="{h}">'
    ]

    lines.append('<g fill="#f5f1e8" stroke="#888888" stroke-width="1">')
    for pi, poly in enumerate(surface.polygons):
        pts = " ".join(
            "{},{}".format(*frame.page(pi, v)) for v in poly.vertices
        )
        lines.append(f'<polygon points="{pts}"/>')
    lines.append("</g>")

    lines.append('<g fill="none" stroke-width="3">')
    for k, pairing in enumerate(surface.pairings):
        color = EDGE_PALETTE[k % len(EDGE_PALETTE)]
        for pi, ei in (pairing.a, pairing.b):
            a, b = surface.polygons[pi].edge(ei)
            x1, y1 = frame.page(pi, a)
            x2, y2 = frame.page(pi, b)
            lines.append(
                f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" '
                f'stroke="{color}"/>'
            )
    lines.append("</g>")

    if traces:
        lines.append('<g fill="none" stroke-width="2">')
        for t, trace in enumerate(traces):
            color = TRACE_PALETTE[t % len(TRACE_PALETTE)]
            for polygon, src, dst in _segments(trace):
                x1, y1 = frame.page(polygon, src)
                x2, y2 = frame.page(polygon, dst)
                lines.append(
                    f'<polyline points="{x1},{y1} {x2},{y2}" '
                    f'stroke="{color}"/>'
                )
        lines.append("</g>")

    cones = [
        corner
        for corners, turns in report.cone_angles
        if turns != 1
        for corner in corners
    ]
    if cones:
        lines.append('<g fill="#222222">')
        for pi, vi in cones:
            cx, cy = frame.page(pi, surface.polygons[pi].vertices[vi])
            lines.append(f'<circle cx="{cx}" cy="{cy}" r="5"/>')
        lines.append("</g>")

    lines.append("</svg>")
    text = "\n".join(lines) + "\n"
    if out_path is not None:
        from .io_json import write_text

        write_text(out_path, text)
    return text
