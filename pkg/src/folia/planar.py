"""Exact planar primitives: rational points, orientation tests, angular
order.  Nothing in here ever rounds; every predicate is a sign test on
Fraction arithmetic."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class PlanarPoint:
    x: Fraction
    y: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", Fraction(self.x))
        object.__setattr__(self, "y", Fraction(self.y))

    def __add__(self, other: "PlanarPoint") -> "PlanarPoint":
        return PlanarPoint(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "PlanarPoint") -> "PlanarPoint":
        return PlanarPoint(self.x - other.x, self.y - other.y)

    def scaled(self, k: Fraction) -> "PlanarPoint":
        return PlanarPoint(k * self.x, k * self.y)

    def __repr__(self) -> str:
        return f"({self.x}, {self.y})"


def cross(u: PlanarPoint, v: PlanarPoint) -> Fraction:
    return u.x * v.y - u.y * v.x


def dot(u: PlanarPoint, v: PlanarPoint) -> Fraction:
    return u.x * v.x + u.y * v.y


def orient(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> Fraction:
    """Positive iff a, b, c make a left turn."""
    return cross(b - a, c - a)


def collinear(a: PlanarPoint, b: PlanarPoint, c: PlanarPoint) -> bool:
    return orient(a, b, c) == 0


def on_segment(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> bool:
    """p lies on the closed segment [a, b]."""
    if not collinear(a, b, p):
        return False
    return min(a.x, b.x) <= p.x <= max(a.x, b.x) and min(a.y, b.y) <= p.y <= max(a.y, b.y)


def segments_intersect(
    a: PlanarPoint, b: PlanarPoint, c: PlanarPoint, d: PlanarPoint
) -> bool:
    """Closed segments [a,b] and [c,d] share at least one point."""
    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and 0 not in (o1, o2, o3, o4):
        return True
    return (
        (o1 == 0 and on_segment(c, a, b))
        or (o2 == 0 and on_segment(d, a, b))
        or (o3 == 0 and on_segment(a, c, d))
        or (o4 == 0 and on_segment(b, c, d))
    )


def quadrant(v: PlanarPoint) -> int:
    """Index of the quarter-turn sector of a nonzero vector, CCW from +x."""
    if v.x == 0 and v.y == 0:
        raise ValueError("zero vector has no direction")
    if v.x > 0 and v.y >= 0:
        return 0
    if v.x <= 0 and v.y > 0:
        return 1
    if v.x < 0 and v.y <= 0:
        return 2
    return 3


def angular_less(u: PlanarPoint, v: PlanarPoint) -> bool:
    """True iff the CCW angle of u from +x is strictly below that of v."""
    qu, qv = quadrant(u), quadrant(v)
    if qu != qv:
        return qu < qv
    return cross(u, v) > 0


def same_direction(u: PlanarPoint, v: PlanarPoint) -> bool:
    """Nonzero vectors pointing the same way (positive multiples)."""
    return cross(u, v) == 0 and dot(u, v) > 0


def signed_area_doubled(vertices: list[PlanarPoint]) -> Fraction:
    total = Fraction(0)
    n = len(vertices)
    for i in range(n):
        total += cross(vertices[i], vertices[(i + 1) % n])
    return total


def point_in_polygon(p: PlanarPoint, vertices: list[PlanarPoint]) -> str:
    """Exact location test: 'inside', 'boundary', or 'outside'.

    Crossing-number walk with all degeneracies decided by rational signs.
    """
    n = len(vertices)
    inside = False
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        if on_segment(p, a, b):
            return "boundary"
        # count proper upward/downward edge crossings of the ray to +x
        if (a.y > p.y) != (b.y > p.y):
            # x coordinate of the edge at height p.y
            t = (p.y - a.y) / (b.y - a.y)
            x_cross = a.x + t * (b.x - a.x)
            if x_cross > p.x:
                inside = not inside
    return "inside" if inside else "outside"
