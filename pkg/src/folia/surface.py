"""Polygonal dilation surfaces with exact rational vertex data.

A surface is a finite set of simple counterclockwise polygons together
with edge pairings z -> lam*z + v (lam a positive rational, v a rational
vector), each edge glued to exactly one partner with reversed
orientation.  Because the structure group never rotates, a directed leaf
keeps its direction vector across every gluing; that one fact is what
makes exact tracing, exact cone angles, and exact first-return maps
possible with nothing but Fraction arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (
    InvalidSurface,
    NotBijective,
    NotClosed,
    StartsAtSingularity,
    TransversalContainsSingularity,
)
from .interval import Interval
from .iet import AffinePiece, Aiet, PartialAiet, check_bijective
from .planar import (
    PlanarPoint,
    angular_less,
    collinear,
    cross,
    dot,
    on_segment,
    point_in_polygon,
    same_direction,
    segments_intersect,
    signed_area_doubled,
)

CLOSED = "closed"
HIT_SINGULARITY = "hit-singularity"
BUDGET_EXHAUSTED = "budget-exhausted"

_F = Fraction


@dataclass(frozen=True)
class Polygon:
    """Simple polygon, vertices counterclockwise so the interior is to
    the left of every directed edge.  Edge i runs vertices[i] ->
    vertices[i+1 mod n]; straight (angle pi) corners are legal, which is
    how suspension rectangles carry their marked subdivision points."""

    vertices: tuple[PlanarPoint, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(self.vertices))

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edge(self, i: int) -> tuple[PlanarPoint, PlanarPoint]:
        return self.vertices[i], self.vertices[(i + 1) % self.n]

    def edge_vector(self, i: int) -> PlanarPoint:
        a, b = self.edge(i)
        return b - a


@dataclass(frozen=True)
class EdgePairing:
    """Gluing z -> lam*z + v carrying edge `a` onto edge `b` reversed.

    Orientation reversal is forced by the two polygon interiors sitting
    on opposite sides of the glued segment: the map sends a's source
    vertex to b's target vertex.  The b-to-a direction is the exact
    inverse map, so one record per glued pair is enough.
    """

    a: tuple[int, int]
    b: tuple[int, int]
    lam: Fraction
    v: PlanarPoint

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", Fraction(self.lam))
        if self.lam <= 0:
            raise ValueError("dilation factor must be positive")

    def apply(self, p: PlanarPoint) -> PlanarPoint:
        return PlanarPoint(self.lam * p.x + self.v.x, self.lam * p.y + self.v.y)

    def reversed(self) -> "EdgePairing":
        inv = 1 / self.lam
        return EdgePairing(
            self.b, self.a, inv, PlanarPoint(-self.v.x * inv, -self.v.y * inv)
        )


@dataclass(frozen=True)
class Direction:
    """Direction of a foliation, stored as a coprime integer vector."""

    dx: int
    dy: int

    def __post_init__(self) -> None:
        if self.dx == 0 and self.dy == 0:
            raise ValueError("direction needs a nonzero vector")
        g = math.gcd(abs(self.dx), abs(self.dy))
        object.__setattr__(self, "dx", self.dx // g)
        object.__setattr__(self, "dy", self.dy // g)

    @classmethod
    def from_slope(cls, s: Fraction) -> "Direction":
        """The direction (s, 1): upward flow leaning s to the right per
        unit height."""
        s = Fraction(s)
        return cls(s.numerator, s.denominator)

    def vector(self) -> PlanarPoint:
        return PlanarPoint(_F(self.dx), _F(self.dy))

    def opposite(self) -> "Direction":
        return Direction(-self.dx, -self.dy)


@dataclass(frozen=True)
class Surface:
    polygons: tuple[Polygon, ...]
    pairings: tuple[EdgePairing, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "polygons", tuple(self.polygons))
        object.__setattr__(self, "pairings", tuple(self.pairings))

    def gluing_table(self) -> dict[tuple[int, int], EdgePairing]:
        """Directed lookup: edge -> the pairing taking it to its partner."""
        table: dict[tuple[int, int], EdgePairing] = {}
        for pairing in self.pairings:
            for directed in (pairing, pairing.reversed()):
                if directed.a in table:
                    raise InvalidSurface(f"edge {directed.a} paired twice")
                table[directed.a] = directed
        return table

    def vertex_classes(self) -> list[list[tuple[int, int]]]:
        """Corners grouped by glued surface point, each cycle in the
        order produced by rotating around the point."""
        table = self.gluing_table()
        seen: set[tuple[int, int]] = set()
        classes = []
        for pi, poly in enumerate(self.polygons):
            for vi in range(poly.n):
                if (pi, vi) in seen:
                    continue
                cycle = []
                corner = (pi, vi)
                while corner not in seen:
                    seen.add(corner)
                    cycle.append(corner)
                    corner = self._next_corner(corner, table)
                classes.append(cycle)
        return classes

    def _next_corner(
        self, corner: tuple[int, int], table: dict[tuple[int, int], EdgePairing]
    ) -> tuple[int, int]:
        # rotate around the vertex by crossing the incoming edge; the
        # pairing sends this corner's vertex to the partner edge's source
        pi, vi = corner
        n = self.polygons[pi].n
        pairing = table[(pi, (vi - 1) % n)]
        qi, ej = pairing.b
        return (qi, ej)

    def cone_orders(self) -> list[tuple[list[tuple[int, int]], int]]:
        """Each vertex class with its exact angle multiple l (angle 2*pi*l).

        Gluings scale but never turn, so consecutive outgoing-edge rays
        around a class differ by exactly the corner angle crossed.  The
        total angle is then 2*pi times the number of wraps of the cyclic
        ray sequence past the +x axis, an exact count of angular descents.
        """
        out = []
        for cycle in self.vertex_classes():
            rays = [self.polygons[pi].edge_vector(vi) for pi, vi in cycle]
            if len(rays) == 1:
                raise InvalidSurface(
                    "single-corner vertex class implies a full-turn corner"
                )
            wraps = 0
            for i, ray in enumerate(rays):
                nxt = rays[(i + 1) % len(rays)]
                if same_direction(ray, nxt):
                    raise InvalidSurface("zero corner angle around a vertex class")
                if angular_less(nxt, ray):
                    wraps += 1
            out.append((cycle, wraps))
        return out

    def genus(self) -> int:
        V = len(self.vertex_classes())
        E = sum(p.n for p in self.polygons) // 2
        F = len(self.polygons)
        chi = V - E + F
        if chi % 2 != 0:
            raise InvalidSurface(f"odd Euler characteristic {chi}")
        return (2 - chi) // 2


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    errors: tuple[str, ...]
    cone_angles: tuple[tuple[tuple[tuple[int, int], ...], int], ...] = ()
    genus: int | None = None


def _polygon_errors(pi: int, poly: Polygon) -> list[str]:
    errors = []
    n = poly.n
    if n < 3:
        return [f"polygon {pi}: fewer than 3 vertices"]
    if len(set(poly.vertices)) != n:
        errors.append(f"polygon {pi}: repeated vertex")
        return errors
    if signed_area_doubled(list(poly.vertices)) <= 0:
        errors.append(f"polygon {pi}: not counterclockwise")
    for k in range(n):
        out_ray = poly.edge_vector(k)
        in_ray = poly.vertices[(k - 1) % n] - poly.vertices[k]
        if same_direction(out_ray, in_ray):
            errors.append(f"polygon {pi}: zero-angle corner at vertex {k}")
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share exactly their common vertex
            a1, b1 = poly.edge(i)
            a2, b2 = poly.edge(j)
            if segments_intersect(a1, b1, a2, b2):
                errors.append(f"polygon {pi}: edges {i} and {j} intersect")
    return errors


def validate(surface: Surface) -> ValidationReport:
    """Full structural check: polygon shape, every edge glued exactly once
    to a distinct partner, each gluing an exact match of segments, integer
    cone angles, and an even Euler characteristic."""
    errors: list[str] = []
    for pi, poly in enumerate(surface.polygons):
        errors.extend(_polygon_errors(pi, poly))

    expected = {
        (pi, ei) for pi, poly in enumerate(surface.polygons) for ei in range(poly.n)
    }
    seen: set[tuple[int, int]] = set()
    for pairing in surface.pairings:
        for key in (pairing.a, pairing.b):
            if key not in expected:
                errors.append(f"pairing references unknown edge {key}")
            elif key in seen:
                errors.append(f"edge {key} paired twice")
            else:
                seen.add(key)
        if pairing.a == pairing.b:
            errors.append(f"edge {pairing.a} paired with itself")
    for key in sorted(expected - seen):
        errors.append(f"unpaired edge {key}")
    if errors:
        return ValidationReport(ok=False, errors=tuple(errors))

    for pairing in surface.pairings:
        (pi, ei), (qi, ej) = pairing.a, pairing.b
        src_a, tgt_a = surface.polygons[pi].edge(ei)
        src_b, tgt_b = surface.polygons[qi].edge(ej)
        if pairing.apply(src_a) != tgt_b or pairing.apply(tgt_a) != src_b:
            errors.append(
                f"pairing {pairing.a}<->{pairing.b} does not carry the edge onto "
                "its partner reversed"
            )
    if errors:
        return ValidationReport(ok=False, errors=tuple(errors))

    try:
        cones = surface.cone_orders()
        genus = surface.genus()
    except InvalidSurface as exc:
        return ValidationReport(ok=False, errors=(str(exc),))
    for cycle, l in cones:
        if l < 1:
            errors.append(f"vertex class at {cycle[0]}: cone angle below 2*pi")
    if genus < 0:
        errors.append(f"negative genus {genus}")
    cone_angles = tuple((tuple(cycle), l) for cycle, l in cones)
    return ValidationReport(
        ok=not errors, errors=tuple(errors), cone_angles=cone_angles, genus=genus
    )


def suspend(T: Aiet) -> Surface:
    """Suspension rectangle of a bijective affine exchange.

    Height-1 rectangle over T's ambient interval; the top edge is cut at
    the domain breakpoints, the bottom at the image breakpoints, and each
    top piece is glued to its image piece by z -> lam*z + (c, -lam),
    which restricts to T itself on the horizontal coordinate.  The two
    vertical sides are glued by translation.
    """
    cert = check_bijective(T)
    if not cert.bijective:
        raise NotBijective("suspension needs a bijective exchange")
    lo, hi = T.ambient.lo, T.ambient.hi
    dom_cuts = [p.domain.lo for p in T.pieces] + [hi]
    img_cuts = sorted(p.image.lo for p in T.pieces) + [hi]
    n = len(T.pieces)

    verts = [PlanarPoint(x, _F(0)) for x in img_cuts]
    verts.append(PlanarPoint(hi, _F(1)))
    verts.extend(PlanarPoint(x, _F(1)) for x in reversed(dom_cuts[:-1]))
    poly = Polygon(tuple(verts), name="suspension")

    bottom_index = {x: j for j, x in enumerate(img_cuts[:-1])}
    pairings = []
    for i, piece in enumerate(T.pieces):
        top_edge = 2 * n - i  # top pieces run right to left
        bottom_edge = bottom_index[piece.image.lo]
        pairings.append(
            EdgePairing(
                (0, top_edge),
                (0, bottom_edge),
                piece.slope,
                PlanarPoint(piece.offset, -piece.slope),
            )
        )
    pairings.append(
        EdgePairing((0, n), (0, 2 * n + 1), _F(1), PlanarPoint(lo - hi, _F(0)))
    )
    surface = Surface((poly,), tuple(pairings))
    report = validate(surface)
    if not report.ok:
        raise InvalidSurface(f"suspension failed validation: {list(report.errors)}")
    return surface


def bottom_transversals(T: Aiet) -> list["Transversal"]:
    """The suspension rectangle's bottom side as transversal pieces, one
    per bottom edge in left-to-right order.

    With these, the concatenated arc-length chart of
    first_return_on_transversal is the horizontal coordinate shifted to
    start at 0, so the vertical first return reproduces T itself when T's
    ambient starts at 0.
    """
    img_cuts = sorted(p.image.lo for p in T.pieces) + [T.ambient.hi]
    return [
        Transversal(0, PlanarPoint(a, _F(0)), PlanarPoint(b, _F(0)))
        for a, b in zip(img_cuts, img_cuts[1:])
    ]


@dataclass(frozen=True)
class CrossingEvent:
    from_polygon: int
    edge_index: int
    point: PlanarPoint
    to_polygon: int
    to_point: PlanarPoint
    lam: Fraction


@dataclass(frozen=True)
class LeafTrace:
    start_polygon: int
    start_point: PlanarPoint
    direction: Direction
    events: tuple[CrossingEvent, ...]
    status: str
    end_polygon: int
    end_point: PlanarPoint
    singular_vertex: tuple[int, int] | None = None

    @property
    def accumulated_factor(self) -> Fraction:
        out = _F(1)
        for ev in self.events:
            out *= ev.lam
        return out


def _exit_through_boundary(
    poly: Polygon, p: PlanarPoint, d: PlanarPoint
) -> tuple[Fraction, PlanarPoint, int, bool]:
    """First boundary hit of the ray p + t*d with t > 0.

    Returns (t, hit point, edge index, vertex_hit).  A ray running along
    an edge line reports the far vertex as a vertex hit.
    """
    best: tuple[Fraction, PlanarPoint, int, bool] | None = None
    for i in range(poly.n):
        a, b = poly.edge(i)
        e = b - a
        w = a - p
        det = cross(d, e)
        if det == 0:
            if not collinear(p, a, b):
                continue
            for vertex in (a, b):
                diff = vertex - p
                if diff.x == 0 and diff.y == 0:
                    continue
                if same_direction(diff, d):
                    t = (diff.x / d.x) if d.x else (diff.y / d.y)
                    if best is None or t < best[0]:
                        best = (t, vertex, i, True)
            continue
        t = cross(w, e) / det
        u = cross(w, d) / det
        if t <= 0 or u < 0 or u > 1:
            continue
        hit = PlanarPoint(p.x + t * d.x, p.y + t * d.y)
        if best is None or t < best[0]:
            best = (t, hit, i, hit == a or hit == b)
    if best is None:
        raise InvalidSurface("ray found no boundary exit; it leaves the surface")
    return best


def _vertex_index_at(poly: Polygon, p: PlanarPoint) -> int | None:
    for k, v in enumerate(poly.vertices):
        if v == p:
            return k
    return None


def trace_leaf(
    surface: Surface,
    start_polygon: int,
    start_point: PlanarPoint,
    direction: Direction,
    budget: int = 1000,
) -> LeafTrace:
    """Follow a straight leaf through gluings until it closes up, hits a
    vertex, or exhausts the crossing budget.

    No crossing ever changes the direction vector.  Closure is exact
    coincidence with the start: for a start on an edge the crossing image
    must reproduce it, for an interior start the leaf must pass through
    it inside the start polygon.  Every vertex hit ends the trace,
    whatever the cone angle there, so a continuation is never invented.
    """
    poly = surface.polygons[start_polygon]
    if _vertex_index_at(poly, start_point) is not None:
        raise StartsAtSingularity(f"{start_point} is a vertex of its polygon")
    if point_in_polygon(start_point, list(poly.vertices)) == "outside":
        raise ValueError(f"{start_point} lies outside polygon {start_polygon}")
    table = surface.gluing_table()
    d = direction.vector()
    events: list[CrossingEvent] = []
    cur_poly, cur = start_polygon, start_point

    def finished(status: str, end_poly: int, end: PlanarPoint,
                 vertex: tuple[int, int] | None = None) -> LeafTrace:
        return LeafTrace(
            start_polygon, start_point, direction, tuple(events), status,
            end_poly, end, singular_vertex=vertex,
        )

    while True:
        poly = surface.polygons[cur_poly]
        t_exit, hit, edge_idx, vertex_hit = _exit_through_boundary(poly, cur, d)
        if events and cur_poly == start_polygon:
            # does the leaf pass back through its start before leaving?
            diff = start_point - cur
            if (diff.x != 0 or diff.y != 0) and same_direction(diff, d):
                t_s = (diff.x / d.x) if d.x else (diff.y / d.y)
                if t_s < t_exit or start_point == hit:
                    return finished(CLOSED, start_polygon, start_point)
        if vertex_hit:
            vi = _vertex_index_at(poly, hit)
            assert vi is not None
            for cycle in surface.vertex_classes():
                if (cur_poly, vi) in cycle:
                    return finished(HIT_SINGULARITY, cur_poly, hit, vertex=cycle[0])
            raise InvalidSurface(f"vertex ({cur_poly}, {vi}) missing from classes")
        pairing = table[(cur_poly, edge_idx)]
        mapped = pairing.apply(hit)
        events.append(
            CrossingEvent(cur_poly, edge_idx, hit, pairing.b[0], mapped, pairing.lam)
        )
        cur_poly, cur = pairing.b[0], mapped
        if cur_poly == start_polygon and cur == start_point:
            return finished(CLOSED, cur_poly, cur)
        if len(events) >= budget:
            return finished(BUDGET_EXHAUSTED, cur_poly, cur)


def holonomy_of_closed_trace(trace: LeafTrace) -> Fraction:
    """Product of the crossing dilations, checked to agree over every
    cyclic rotation of the event list."""
    if trace.status != CLOSED:
        raise NotClosed(f"trace status is {trace.status}")
    lams = [ev.lam for ev in trace.events]
    rho = _F(1)
    for lam in lams:
        rho *= lam
    for k in range(1, len(lams)):
        rotated = _F(1)
        for lam in lams[k:] + lams[:k]:
            rotated *= lam
        assert rotated == rho
    return rho


@dataclass(frozen=True)
class CylinderClass:
    kind: str  # "flat-cylinder" | "affine-cylinder"
    rho: Fraction


def classify_closed_leaf(trace: LeafTrace) -> CylinderClass:
    rho = holonomy_of_closed_trace(trace)
    kind = "flat-cylinder" if rho == 1 else "affine-cylinder"
    return CylinderClass(kind, rho)


def _rational_norm(v: PlanarPoint) -> Fraction:
    sq = v.x * v.x + v.y * v.y
    num, den = sq.numerator, sq.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        raise ValueError(
            f"segment length sqrt({sq}) is irrational; arc-length "
            "parametrization needs a rational-length transversal"
        )
    return _F(rn, rd)


@dataclass(frozen=True)
class Transversal:
    """Oriented segment inside one polygon, parametrized by arc length
    from `start`.  Owns its start point but not its end point, matching
    the half-open interval convention everywhere else."""

    polygon: int
    start: PlanarPoint
    end: PlanarPoint

    def __post_init__(self) -> None:
        if self.start == self.end:
            raise ValueError("transversal has zero length")
        _rational_norm(self.end - self.start)  # insist on exact arc length

    @property
    def length(self) -> Fraction:
        return _rational_norm(self.end - self.start)

    @property
    def unit(self) -> PlanarPoint:
        v = self.end - self.start
        return v.scaled(1 / _rational_norm(v))

    def param_of(self, p: PlanarPoint) -> Fraction:
        """Arc-length coordinate of a point on the carrying line."""
        return dot(p - self.start, self.unit)

    def point_at(self, t: Fraction) -> PlanarPoint:
        return self.start + self.unit.scaled(t)


def _check_transversals(
    surface: Surface, transversals: Sequence[Transversal], d: PlanarPoint
) -> None:
    if not transversals:
        raise ValueError("need at least one transversal")
    for tr in transversals:
        poly = surface.polygons[tr.polygon]
        if cross(tr.end - tr.start, d) == 0:
            raise ValueError("transversal is parallel to the flow direction")
        for p in (tr.start, tr.end):
            if point_in_polygon(p, list(poly.vertices)) == "outside":
                raise ValueError(f"transversal endpoint {p} outside its polygon")
        for k, v in enumerate(poly.vertices):
            if v != tr.start and v != tr.end and on_segment(v, tr.start, tr.end):
                raise TransversalContainsSingularity(
                    f"vertex {(tr.polygon, k)} lies strictly inside a "
                    "transversal; split the transversal there"
                )
    for i in range(len(transversals)):
        for j in range(i + 1, len(transversals)):
            a, b = transversals[i], transversals[j]
            if a.polygon != b.polygon:
                continue
            if not segments_intersect(a.start, a.end, b.start, b.end):
                continue
            # touching at a single shared endpoint is fine (adjacent
            # pieces of a longer section); anything more is overlap
            shared = {a.start, a.end} & {b.start, b.end}
            if len(shared) != 1:
                raise ValueError("transversals overlap")
            for seg, other in ((a, b), (b, a)):
                for p in (other.start, other.end):
                    if p not in shared and on_segment(p, seg.start, seg.end):
                        raise ValueError("transversals overlap")


@dataclass
class _Chunk:
    """A bundle of leaves in flight: source parameters `span` (in the
    concatenated arc-length chart) currently embedded as the segment
    gamma(t) = A + t*U inside polygon `poly`."""

    span: Interval
    poly: int
    A: PlanarPoint
    U: PlanarPoint
    depth: int
    entered_edge: int | None  # edge of `poly` the bundle entered through


def first_return_on_transversal(
    surface: Surface,
    transversals: Sequence[Transversal],
    direction: Direction,
    budget: int = 64,
) -> PartialAiet:
    """First-return map of the directional flow on a union of transversal
    segments, in concatenated arc-length coordinates starting at 0.

    Whole segments are flowed at once and split exactly where a swept
    leaf meets a polygon vertex or a transversal endpoint, so every
    output piece is affine with slope the product of the pairing
    dilations along its path.  A bundle entering along an edge that
    carries a transversal lands there immediately (the crossing point is
    the return).  Parameters still in flight after `budget` polygon
    transits are reported undefined and unresolved; leaves that would hit
    a vertex bound the pieces but are never themselves continued.
    """
    d = direction.vector()
    _check_transversals(surface, transversals, d)
    table = surface.gluing_table()
    offsets: list[Fraction] = []
    total = _F(0)
    for tr in transversals:
        offsets.append(total)
        total += tr.length
    ambient = Interval(_F(0), total)

    by_polygon: dict[int, list[int]] = {}
    for idx, tr in enumerate(transversals):
        by_polygon.setdefault(tr.polygon, []).append(idx)

    pieces: list[AffinePiece] = []
    unresolved: list[Interval] = []
    work: list[_Chunk] = []
    for idx, tr in enumerate(transversals):
        off = offsets[idx]
        A = tr.start - tr.unit.scaled(off)
        U = tr.unit
        poly_idx = tr.polygon
        poly = surface.polygons[poly_idx]
        carrier = None
        for ei in range(poly.n):
            ea, eb = poly.edge(ei)
            if on_segment(tr.start, ea, eb) and on_segment(tr.end, ea, eb):
                carrier = ei
                break
        if carrier is not None and cross(poly.edge_vector(carrier), d) < 0:
            # the flow leaves the declared polygon straight across the
            # carrying edge: glue the seed through it so the sweep starts
            # on the inward side
            pairing = table[(poly_idx, carrier)]
            A = pairing.apply(A)
            U = U.scaled(pairing.lam)
            poly_idx = pairing.b[0]
        work.append(
            _Chunk(Interval(off, off + tr.length), poly_idx, A, U, 0, None)
        )

    def land(span: Interval, tr_idx: int, A: PlanarPoint, U: PlanarPoint,
             s_const: Fraction, s_slope: Fraction) -> None:
        # landing point gamma(t) + s(t)*d written in the target's chart
        tr = transversals[tr_idx]
        u_vec = tr.unit
        slope = dot(U + d.scaled(s_slope), u_vec)
        if slope <= 0:
            raise ValueError(
                "return reverses transversal orientation; flip the transversal"
            )
        offset = offsets[tr_idx] + dot(A + d.scaled(s_const) - tr.start, u_vec)
        pieces.append(AffinePiece(span, slope, offset))

    while work:
        chunk = work.pop()
        if chunk.depth > budget:
            unresolved.append(chunk.span)
            continue
        poly = surface.polygons[chunk.poly]
        A, U, J = chunk.A, chunk.U, chunk.span
        det_ud = cross(U, d)
        assert det_ud != 0  # leaf bundles stay transverse to the flow

        # 1. entry landing: the bundle arrived along an edge carrying a
        # transversal of this polygon
        if chunk.entered_edge is not None:
            landed = False
            for tr_idx in by_polygon.get(chunk.poly, ()):
                tr = transversals[tr_idx]
                ea, eb = poly.edge(chunk.entered_edge)
                if not (collinear(tr.start, ea, eb) and collinear(tr.end, ea, eb)):
                    continue
                u_vec = tr.unit
                c0 = dot(A - tr.start, u_vec)
                c1 = dot(U, u_vec)
                if c1 == 0:
                    continue
                lo_t = (0 - c0) / c1
                hi_t = (tr.length - c0) / c1
                lo_t, hi_t = min(lo_t, hi_t), max(lo_t, hi_t)
                inside = J.intersect(Interval(lo_t, hi_t))
                if inside is None:
                    continue
                for part in _split_out(J, inside):
                    work.append(
                        _Chunk(part, chunk.poly, A, U, chunk.depth,
                               chunk.entered_edge)
                    )
                land(inside, tr_idx, A, U, _F(0), _F(0))
                landed = True
                break
            if landed:
                continue

        # 2. split parameters interior to the span: leaves through polygon
        # vertices, and leaves through transversal endpoints
        splits: set[Fraction] = set()
        for v in poly.vertices:
            w = v - A
            t_v = cross(w, d) / det_ud
            s_v = cross(U, w) / det_ud
            if s_v > 0 and J.lo < t_v < J.hi:
                splits.add(t_v)
        for tr_idx in by_polygon.get(chunk.poly, ()):
            tr = transversals[tr_idx]
            for target in (tr.start, tr.end):
                w = target - A
                t_v = cross(w, d) / det_ud
                s_v = cross(U, w) / det_ud
                if s_v >= 0 and J.lo < t_v < J.hi:
                    splits.add(t_v)
        if splits:
            bounds = [J.lo] + sorted(splits) + [J.hi]
            for k in range(len(bounds) - 1):
                work.append(
                    _Chunk(Interval(bounds[k], bounds[k + 1]), chunk.poly, A, U,
                           chunk.depth, chunk.entered_edge)
                )
            continue

        # 3. no interior splits: one exit edge serves the whole span
        t_mid = J.midpoint
        p_mid = PlanarPoint(A.x + t_mid * U.x, A.y + t_mid * U.y)
        _, _, edge_idx, _ = _exit_through_boundary(poly, p_mid, d)
        ea, _ = poly.edge(edge_idx)
        e_vec = poly.edge_vector(edge_idx)
        det_e = cross(d, e_vec)
        s_const = cross(ea - A, e_vec) / det_e
        s_slope = -cross(U, e_vec) / det_e

        # 4. transversal hit before (or exactly on) the exit edge
        hit: tuple[Fraction, int, Fraction, Fraction] | None = None
        for tr_idx in by_polygon.get(chunk.poly, ()):
            tr = transversals[tr_idx]
            te = tr.end - tr.start
            det_te = cross(d, te)
            ts_const = cross(tr.start - A, te) / det_te
            ts_slope = -cross(U, te) / det_te
            s_here = ts_const + ts_slope * t_mid
            if s_here <= 0 or s_here > s_const + s_slope * t_mid:
                continue
            land_pt = PlanarPoint(p_mid.x + s_here * d.x, p_mid.y + s_here * d.y)
            u_par = tr.param_of(land_pt)
            if not (0 <= u_par < tr.length):
                continue
            if hit is None or s_here < hit[0]:
                hit = (s_here, tr_idx, ts_const, ts_slope)
        if hit is not None:
            _, tr_idx, ts_const, ts_slope = hit
            land(J, tr_idx, A, U, ts_const, ts_slope)
            continue

        # 5. cross the exit edge: gamma_new(t) = lam*(gamma(t)+s(t)*d) + v
        pairing = table[(chunk.poly, edge_idx)]
        lam = pairing.lam
        A_new = pairing.apply(A + d.scaled(s_const))
        U_new = PlanarPoint(lam * (U.x + s_slope * d.x), lam * (U.y + s_slope * d.y))
        work.append(
            _Chunk(J, pairing.b[0], A_new, U_new, chunk.depth + 1, pairing.b[1])
        )

    pieces.sort(key=lambda piece: piece.domain.lo)
    undef = _coalesce_sorted(sorted(unresolved, key=lambda iv: iv.lo))
    return PartialAiet(
        pieces, ambient, undefined_intervals=tuple(undef), unresolved=tuple(undef)
    )


def _split_out(whole: Interval, part: Interval) -> list[Interval]:
    out = []
    if whole.lo < part.lo:
        out.append(Interval(whole.lo, part.lo))
    if part.hi < whole.hi:
        out.append(Interval(part.hi, whole.hi))
    return out


def _coalesce_sorted(intervals: list[Interval]) -> list[Interval]:
    out: list[Interval] = []
    for iv in intervals:
        if out and out[-1].hi == iv.lo:
            out[-1] = Interval(out[-1].lo, iv.hi)
        else:
            out.append(iv)
    return out
