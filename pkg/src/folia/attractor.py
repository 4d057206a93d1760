"""Finite approximations of the invariant Cantor set of a contracting
interval map.

The object of interest is L minus every forward image of the hole I (the
part of L the map's images miss).  At finite depth that is a gap list
with exact rational measure bookkeeping; on top of it sit membership
queries, orbit-attraction evidence, the attracting/repelling verdict for
invariant sets, and a heuristic box-counting slope.  Gaps are treated as
open intervals: both endpoints of every gap belong to the residual set.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from .errors import HoleMismatch, OutOfDomain
from .interval import Interval, disjoint_sorted, subtract
from .iet import AffinePiece, Aiet, PartialAiet
from .rauzy import TwoBranchMap

ATTRACTING = "attracting"
REPELLING = "repelling"
NEITHER = "neither"
UNKNOWN = "unknown"

MapLike = Union[TwoBranchMap, Aiet, PartialAiet]

# Interval pushing can double the fragment count at every level on
# adversarial input; give up well before that becomes real memory.
FRAGMENT_CAP = 20_000

_F = Fraction


def _pieces_of(f: MapLike) -> tuple[AffinePiece, ...]:
    if isinstance(f, TwoBranchMap):
        return (f.branch_a, f.branch_b)
    return tuple(f.pieces)


def _ambient_of(f: MapLike) -> Interval:
    if isinstance(f, TwoBranchMap):
        return f.L
    return f.ambient


def _evaluate(f: MapLike, x: Fraction) -> Fraction | None:
    """Next orbit point, or None where the map has nothing to say."""
    if isinstance(f, TwoBranchMap):
        return f.evaluate(x) if x in f.L else None
    try:
        return f.evaluate(x)
    except OutOfDomain:
        return None


@dataclass(frozen=True)
class Gap:
    """A level-n fragment of the hole's forward image f^n(I).

    The stored Interval is the package's half-open container; the gap
    itself is open, which only matters at the endpoints and is enforced
    by `contains` and the box counter rather than by a second type.
    """

    level: int
    interval: Interval


@dataclass(frozen=True)
class GapList:
    """All excluded intervals found so far, sorted by position."""

    gaps: tuple[Gap, ...]
    source_hole: Interval | None = None

    def __init__(self, gaps: Sequence[Gap], source_hole: Interval | None = None):
        ordered = sorted(gaps, key=lambda g: g.interval.lo)
        disjoint_sorted(g.interval for g in ordered)
        object.__setattr__(self, "gaps", tuple(ordered))
        object.__setattr__(self, "source_hole", source_hole)

    def total_length(self) -> Fraction:
        return sum((g.interval.length for g in self.gaps), _F(0))

    def level(self, n: int) -> tuple[Gap, ...]:
        return tuple(g for g in self.gaps if g.level == n)

    def intervals(self) -> list[Interval]:
        return [g.interval for g in self.gaps]


@dataclass(frozen=True)
class SingularEncounter:
    level: int
    point: Fraction


@dataclass(frozen=True)
class CantorApprox:
    """Depth-N stand-in for the residual set L minus all hole images.

    residual_measure is the exact leftover length; it stays positive at
    every finite depth.  A clean approximation never has two gaps sharing
    an endpoint (that would isolate a residual point); when an iterate's
    closure has met a breakpoint the first such meeting is recorded and
    the shared-endpoint guarantee is off.
    """

    L: Interval
    gap_list: GapList
    depth: int
    residual_measure: Fraction
    singular_encounter: SingularEncounter | None = None
    _gap_los: tuple[Fraction, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        expected = self.L.length - self.gap_list.total_length()
        if self.residual_measure != expected:
            raise ValueError(
                f"residual measure {self.residual_measure} != "
                f"{self.L.length} - gap total {self.gap_list.total_length()}"
            )
        if self.residual_measure <= 0:
            raise ValueError("finite-depth residual must have positive measure")
        gaps = self.gap_list.gaps
        if self.singular_encounter is None:
            for a, b in zip(gaps, gaps[1:]):
                if a.interval.hi == b.interval.lo:
                    raise ValueError(
                        f"gaps touch at {a.interval.hi} with no singular "
                        "encounter recorded"
                    )
        object.__setattr__(
            self, "_gap_los", tuple(g.interval.lo for g in gaps)
        )

    def residual_cover(self) -> list[Interval]:
        """L minus the gap interiors, as sorted half-open pieces."""
        return subtract(self.L, self.gap_list.intervals())


def _singular_points(pieces: Sequence[AffinePiece], L: Interval,
                     f: MapLike) -> list[Fraction]:
    pts: set[Fraction] = set()
    for p in pieces:
        for q in (p.domain.lo, p.domain.hi):
            if L.lo < q < L.hi:
                pts.add(q)
    if isinstance(f, PartialAiet):
        pts.update(q for q in f.undefined_points if L.lo < q < L.hi)
        for iv in f.undefined_intervals:
            for q in (iv.lo, iv.hi):
                if L.lo < q < L.hi:
                    pts.add(q)
    return sorted(pts)


def _closure_hit(frag: Interval, sing: Sequence[Fraction],
                 undef: Sequence[Interval]) -> Fraction | None:
    for q in sing:
        if frag.lo <= q <= frag.hi:
            return q
    for iv in undef:
        if frag.lo <= iv.hi and iv.lo <= frag.hi:
            return max(frag.lo, iv.lo)
    return None


def build_attractor(f: MapLike, I: Interval, N: int) -> CantorApprox:
    """Push the hole I forward N times and collect the excluded gaps.

    Level n holds the exact image f^n(I); an iterate straddling a
    breakpoint splits into fragments that keep their level.  The first
    time an iterate's closure meets a breakpoint or undefined part the
    encounter is recorded (after that the clean-Cantor argument no longer
    certifies anything) but iteration continues with the fragments.
    """
    if N < 1:
        raise ValueError("need at least one gap level")
    pieces = _pieces_of(f)
    L = _ambient_of(f)
    holes = subtract(L, [p.image for p in pieces])
    if holes != [I]:
        raise HoleMismatch(
            f"hole {I} is not the image complement {holes} of the map"
        )
    undef = f.undefined_intervals if isinstance(f, PartialAiet) else ()
    sing = _singular_points(pieces, L, f)

    gaps: list[Gap] = []
    encounter: SingularEncounter | None = None
    frags = [I]
    for n in range(N):
        for frag in frags:
            gaps.append(Gap(n, frag))
            if encounter is None:
                q = _closure_hit(frag, sing, undef)
                if q is not None:
                    encounter = SingularEncounter(n, q)
        if n + 1 == N:
            break
        nxt: list[Interval] = []
        for frag in frags:
            for piece in pieces:
                part = frag.intersect(piece.domain)
                if part is not None:
                    nxt.append(piece.restrict(part).image)
        nxt.sort(key=lambda iv: iv.lo)
        if len(gaps) + len(nxt) > FRAGMENT_CAP:
            raise ValueError(
                f"gap fragments exceed {FRAGMENT_CAP}; map is splitting "
                "too violently for this depth"
            )
        frags = nxt

    total = sum((g.interval.length for g in gaps), _F(0))
    return CantorApprox(
        L, GapList(gaps, I), N, L.length - total, encounter
    )


@dataclass(frozen=True)
class InGap:
    level: int


@dataclass(frozen=True)
class InResidual:
    pass


def contains(approx: CantorApprox, x: Fraction) -> InGap | InResidual:
    """Locate x against the depth-N gap set.

    InResidual means "not excluded by any recorded gap", which includes
    every gap endpoint; at finite depth it is an over-approximation of
    true residual membership.
    """
    if x not in approx.L:
        raise OutOfDomain(f"{x} outside {approx.L}")
    gaps = approx.gap_list.gaps
    k = bisect_right(approx._gap_los, x) - 1
    if k >= 0:
        g = gaps[k]
        if g.interval.lo < x < g.interval.hi:
            return InGap(g.level)
    return InResidual()


def _distance_to_residual(approx: CantorApprox, x: Fraction) -> tuple[Fraction, int | None]:
    where = contains(approx, x)
    if isinstance(where, InResidual):
        return _F(0), None
    gaps = approx.gap_list.gaps
    k = bisect_right(approx._gap_los, x) - 1
    iv = gaps[k].interval
    return min(x - iv.lo, iv.hi - x), where.level


@dataclass(frozen=True)
class OrbitTrack:
    start: Fraction
    distances: tuple[Fraction, ...]
    levels: tuple[int | None, ...]
    nonincreasing: bool
    within_gap_bounds: bool


@dataclass(frozen=True)
class AttractionReport:
    tracks: tuple[OrbitTrack, ...]

    @property
    def all_nonincreasing(self) -> bool:
        return all(t.nonincreasing for t in self.tracks)


def attraction_test(
    f: MapLike,
    approx: CantorApprox,
    samples: Sequence[Fraction],
    iterations: int,
) -> AttractionReport:
    """Orbit-by-orbit evidence that the residual set attracts.

    Each sample is iterated and the exact distance from every orbit point
    to the gap complement is recorded (zero when the point is not inside
    any recorded gap).  A track is cut short if the orbit leaves the
    map's domain.  within_gap_bounds checks each in-gap distance against
    the longest fragment of the gap's level.
    """
    bound: dict[int, Fraction] = {}
    for g in approx.gap_list.gaps:
        length = g.interval.length
        if length > bound.get(g.level, _F(0)):
            bound[g.level] = length
    tracks = []
    for x0 in samples:
        orbit = [Fraction(x0)]
        for _ in range(iterations):
            nxt = _evaluate(f, orbit[-1])
            if nxt is None or nxt not in approx.L:
                break
            orbit.append(nxt)
        dists: list[Fraction] = []
        levels: list[int | None] = []
        for x in orbit:
            d, lvl = _distance_to_residual(approx, x)
            dists.append(d)
            levels.append(lvl)
        ok_bounds = all(
            lvl is None or d <= bound[lvl] for d, lvl in zip(dists, levels)
        )
        tracks.append(
            OrbitTrack(
                start=Fraction(x0),
                distances=tuple(dists),
                levels=tuple(levels),
                nonincreasing=all(b <= a for a, b in zip(dists, dists[1:])),
                within_gap_bounds=ok_bounds,
            )
        )
    return AttractionReport(tuple(tracks))


def _coalesce(intervals: list[Interval]) -> list[Interval]:
    # canonical form of a finite union: sorted, with touching parts merged
    out: list[Interval] = []
    for iv in sorted(intervals, key=lambda iv: iv.lo):
        if out and iv.lo <= out[-1].hi:
            if iv.hi > out[-1].hi:
                out[-1] = Interval(out[-1].lo, iv.hi)
        else:
            out.append(iv)
    return out


def _push_set(pieces: Sequence[AffinePiece], frags: list[Interval]) -> list[Interval]:
    out: list[Interval] = []
    for frag in frags:
        for piece in pieces:
            part = frag.intersect(piece.domain)
            if part is not None:
                out.append(piece.restrict(part).image)
    return _coalesce(out)


def _contained_in(small: list[Interval], big: list[Interval]) -> bool:
    j = 0
    for iv in small:
        while j < len(big) and big[j].hi < iv.hi:
            j += 1
        if j == len(big) or not (big[j].lo <= iv.lo and iv.hi <= big[j].hi):
            return False
    return True


def _measure(frags: list[Interval]) -> Fraction:
    return sum((iv.length for iv in frags), _F(0))


def _image_chain(
    pieces: Sequence[AffinePiece], L: Interval, N: int
) -> list[list[Interval]] | None:
    chain = [[L]]
    for _ in range(N):
        nxt = _push_set(pieces, chain[-1])
        if len(nxt) > FRAGMENT_CAP:
            return None
        chain.append(nxt)
    return chain


def _chain_kind(chain: list[list[Interval]]) -> str:
    strict = True
    for a, b in zip(chain, chain[1:]):
        if not _contained_in(b, a):
            return "escapes"
        if _measure(b) == _measure(a):
            strict = False
    return "nests" if strict else "stalls"


def invariant_set_character(f: MapLike, approx: CantorApprox, N: int) -> str:
    """Attracting/repelling verdict for the residual set at finite depth.

    Attracting: forward images of L shrink strictly every step and land
    exactly on the complement of the known gaps.  Repelling: the same
    holds for the branch-wise inverse (the case where f itself is the
    expanding surjective side).  Neither: both directions freeze onto one
    common proper subset, which is how a neutral hole shows up.  Anything
    else, including fragment blow-ups past the cap, is Unknown.
    """
    if N < 1:
        return UNKNOWN
    pieces = _pieces_of(f)
    inverse = [p.inverted() for p in pieces]
    known = subtract(
        approx.L,
        [g.interval for g in approx.gap_list.gaps if g.level < N],
    )
    fwd = _image_chain(pieces, approx.L, N)
    bwd = _image_chain(inverse, approx.L, N)
    if fwd is None or bwd is None:
        return UNKNOWN
    fwd_kind = _chain_kind(fwd)
    bwd_kind = _chain_kind(bwd)
    if fwd_kind == "nests" and fwd[-1] == known:
        return ATTRACTING
    if bwd_kind == "nests" and bwd[-1] == known:
        return REPELLING
    if fwd_kind == "stalls" and bwd_kind == "stalls" and fwd[-1] == bwd[-1]:
        return NEITHER
    return UNKNOWN


@dataclass(frozen=True)
class BoxCountEstimate:
    slope: float
    points: tuple[tuple[float, float], ...]
    residuals: tuple[float, ...]


def _box_count(approx: CantorApprox, scale: Fraction) -> int:
    """Boxes of the given size meeting the gap complement, exact."""
    gaps = approx.gap_list.gaps
    los = approx._gap_los
    count = 0
    a = approx.L.lo
    while a < approx.L.hi:
        b = min(a + scale, approx.L.hi)
        k = bisect_right(los, a) - 1
        swallowed = False
        if k >= 0:
            iv = gaps[k].interval
            # the closed box must sit strictly inside one open gap to
            # miss the residual set
            swallowed = iv.lo < a and b < iv.hi
        if not swallowed:
            count += 1
        a = b
    return count


def box_counting_estimate(
    approx: CantorApprox, scales: Sequence[Fraction]
) -> BoxCountEstimate:
    """Least-squares slope of log(count) against log(1/scale).

    Heuristic only: the answer depends on the depth of the approximation
    and the choice of scales, and no convergence claim is made.
    """
    if len(scales) < 3:
        raise ValueError("need at least 3 scales for a slope")
    xs: list[float] = []
    ys: list[float] = []
    for sc in scales:
        sc = Fraction(sc)
        if sc <= 0:
            raise ValueError("scales must be positive")
        xs.append(-math.log(float(sc)))
        ys.append(math.log(_box_count(approx, sc)))
    n = len(xs)
    sx, sy = math.fsum(xs), math.fsum(ys)
    sxx = math.fsum(x * x for x in xs)
    sxy = math.fsum(x * y for x, y in zip(xs, ys))
    denom = n * sxx - sx * sx
    if denom == 0:
        raise ValueError("scales must not all coincide")
    slope = (n * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / n
    residuals = tuple(y - (intercept + slope * x) for x, y in zip(xs, ys))
    return BoxCountEstimate(
        slope=slope,
        points=tuple(zip(xs, ys)),
        residuals=residuals,
    )
