"""Half-open rational intervals [lo, hi).

The half-open convention runs through the whole package: domains partition
without overlap, gluing is a bijection of points, and the right endpoint of
an ambient interval is never a domain point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .rational import format_rat


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if not isinstance(self.lo, Fraction) or not isinstance(self.hi, Fraction):
            object.__setattr__(self, "lo", Fraction(self.lo))
            object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo >= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x: Fraction) -> bool:
        return self.lo <= x < self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def strictly_contains(self, other: "Interval") -> bool:
        """Proper inclusion: contained and distinct from self."""
        return self.contains_interval(other) and (
            self.lo < other.lo or other.hi < self.hi
        )

    def intersect(self, other: "Interval") -> "Interval | None":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return Interval(lo, hi) if lo < hi else None

    def overlaps(self, other: "Interval") -> bool:
        return max(self.lo, other.lo) < min(self.hi, other.hi)

    def shift(self, delta: Fraction) -> "Interval":
        return Interval(self.lo + delta, self.hi + delta)

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __repr__(self) -> str:
        return f"[{format_rat(self.lo)}, {format_rat(self.hi)})"


def disjoint_sorted(intervals: Iterable[Interval]) -> list[Interval]:
    """Sort and check pairwise disjointness; raises on overlap."""
    out = sorted(intervals, key=lambda iv: iv.lo)
    for a, b in zip(out, out[1:]):
        if a.hi > b.lo:
            raise ValueError(f"overlapping intervals {a} and {b}")
    return out


def subtract(ambient: Interval, holes: Iterable[Interval]) -> list[Interval]:
    """Ambient minus a disjoint family of subintervals, as sorted pieces."""
    cursor = ambient.lo
    out: list[Interval] = []
    for h in disjoint_sorted(holes):
        clipped = h.intersect(ambient)
        if clipped is None:
            continue
        if cursor < clipped.lo:
            out.append(Interval(cursor, clipped.lo))
        cursor = max(cursor, clipped.hi)
    if cursor < ambient.hi:
        out.append(Interval(cursor, ambient.hi))
    return out


def tiles_exactly(ambient: Interval, pieces: Iterable[Interval]) -> bool:
    """True iff the pieces are disjoint and cover ambient with no gap."""
    try:
        ordered = disjoint_sorted(pieces)
    except ValueError:
        return False
    if not ordered:
        return False
    if ordered[0].lo != ambient.lo or ordered[-1].hi != ambient.hi:
        return False
    return all(a.hi == b.lo for a, b in zip(ordered, ordered[1:]))


def iter_gaps(ambient: Interval, pieces: Iterable[Interval]) -> Iterator[Interval]:
    """Yield the uncovered parts of ambient, assuming disjoint pieces."""
    yield from subtract(ambient, pieces)
