"""The genus-2 running example: a dilation surface with one attracting
and one repelling quasi-minimal set in the near-vertical direction cone.

Everything here is pinned to exact rationals.  The base of the suspension
is a four-piece affine interval exchange on [0, 3) with the reversal
permutation and slopes (2, 1/2, 1/2, 2); the second piece has length
ell2 = 1 - 2**-26, which parks the vertical direction extremely deep in
the contracting cascade (about 25 doubling steps before the first
renormalization case change).

Directions are parametrized by the slope s of the line field (s, 1).  For
s in [0, ell2) every leaf leaving the cross-cut [2/3, 5/3) comes back in
one pass through the gluing, so the first-return map is the aligned
two-branch contraction with cut 2/3 + (ell2 - s) and slopes (1/2, 1/2);
that closed form is cross-checked against the surface tracer in the test
suite.  The mirror cross-cut behind the expanding pieces carries the
repelling structure: its backward return is again a total two-branch
contraction, so the forward return is an expanding partial map.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DirectionOutsideSector
from .interval import Interval
from .iet import AffinePiece, Aiet, PartialAiet
from .rauzy import TwoBranchMap, aligned_state
from .surface import (
    Direction,
    LeafTrace,
    PlanarPoint,
    Surface,
    Transversal,
    first_return_on_transversal,
    suspend,
    trace_leaf,
)

# Length of the long contracted piece.  1 - 2**-26 keeps the whole
# near-vertical cone inside the one-pass return sector while making the
# vertical itself take ~25 induction steps to leave the doubling cascade.
ELL2 = Fraction(2**26 - 1, 2**26)

_F = Fraction


def base_aiet() -> Aiet:
    """Four-piece exchange on [0, 3): reversal order, slopes (2, 1/2, 1/2, 2).

    Piece images tile [0, 3) in reverse, so the map is bijective; the two
    expanding pieces are sent to the ends and the two contracted ones fill
    the middle.
    """
    l2 = ELL2
    pieces = [
        AffinePiece(Interval(_F(0), _F(2, 3)), _F(2), _F(5, 3)),
        AffinePiece(Interval(_F(2, 3), _F(2, 3) + l2), _F(1, 2), _F(4, 3) - l2 / 2),
        AffinePiece(Interval(_F(2, 3) + l2, _F(8, 3)), _F(1, 2), _F(1, 3) - l2 / 2),
        AffinePiece(Interval(_F(8, 3), _F(3)), _F(2), _F(-16, 3)),
    ]
    return Aiet(pieces, Interval(_F(0), _F(3)))


# Cross-cut of the attracting side, in base coordinates.
ATTRACTING_CUT = Interval(_F(2, 3), _F(5, 3))

# Unrolled cross-cut of the repelling side for direction slope s: the arc
# [8/3 - s, 3) followed by [0, 2/3 - s), written as one coordinate line
# [8/3 - s, 11/3 - s) with the wrap at 3.
REPELLING_CUT_LEN = _F(1)


def slope_sector() -> Interval:
    """Directions (s, 1) whose cross-cut return closes in one pass."""
    return Interval(_F(0), ELL2)


def require_in_sector(s: Fraction) -> Fraction:
    s = Fraction(s)
    if s not in slope_sector():
        raise DirectionOutsideSector(
            f"slope {s} outside the one-pass return sector [0, {ELL2})"
        )
    return s


def two_branch_family(s: Fraction) -> TwoBranchMap:
    """First return to [2/3, 5/3) of the direction-(s, 1) foliation.

    Derivation: a leaf from x climbs to x + s on the top edge, which lies
    in the second base piece iff x < 2/3 + ell2 - s, and in the third
    otherwise; both glued images land back inside the cross-cut.  Hence an
    aligned state with cut 2/3 + (ell2 - s) and both slopes 1/2.
    """
    s = require_in_sector(s)
    return aligned_state(ATTRACTING_CUT, _F(2, 3) + ELL2 - s, _F(1, 2), _F(1, 2))


def normalized_cut(s: Fraction) -> Fraction:
    """Cut position of the return map in [0, 1) coordinates: ell2 - s."""
    return ELL2 - require_in_sector(s)


def repelling_chart_sector() -> Interval:
    """Slopes whose repelling cross-cut straddles the vertical gluing.

    Past 2/3 the shifted arc no longer wraps and this presentation
    degenerates to a single branch, so the two-branch chart stops there
    even though the sector of one-pass attracting returns continues.
    """
    return Interval(_F(0), _F(2, 3))


def require_in_repelling_chart(s: Fraction) -> Fraction:
    s = require_in_sector(s)
    if s not in repelling_chart_sector():
        raise DirectionOutsideSector(
            f"slope {s} outside the repelling chart sector [0, 2/3)"
        )
    return s


def repelling_backward_family(s: Fraction) -> TwoBranchMap:
    """Backward return to the unrolled repelling cross-cut.

    Flowing DOWN from the cut and inverting the expanding gluing pieces
    gives a total two-branch contraction on [8/3 - s, 11/3 - s) with cut
    at the wrap coordinate 3 and both slopes 1/2; its hole has length 1/2
    for every chart slope.
    """
    s = require_in_repelling_chart(s)
    lo = _F(8, 3) - s
    return aligned_state(Interval(lo, lo + 1), _F(3), _F(1, 2), _F(1, 2))


def repelling_forward_return(s: Fraction) -> PartialAiet:
    """Forward return on the repelling cross-cut: expanding and partial.

    This is the branch-wise inverse of the backward contraction; it is
    undefined exactly on the backward map's hole and surjective onto the
    cut, which is the signature the invariant-set classifier keys on.
    """
    back = repelling_backward_family(s)
    inv_pieces = sorted(
        (back.branch_a.inverted(), back.branch_b.inverted()),
        key=lambda piece: piece.domain.lo,
    )
    return PartialAiet(
        inv_pieces, back.L, undefined_intervals=(back.hole,)
    )


# A direction with a visibly affine closed leaf: through (7/3, 0) with
# slope -2 the leaf crosses the gluing once and comes back scaled by 2.
CLOSED_LEAF_DIRECTION = (_F(-2), _F(1))
CLOSED_LEAF_BASEPOINT = _F(7, 3)
CLOSED_LEAF_HOLONOMY = _F(2)


def build_surface() -> Surface:
    """Suspension of the base exchange: a 3 x 1 rectangle with ten marked
    boundary points, closing up to genus 2 with two cone points of angle
    4 pi."""
    return suspend(base_aiet())


def attracting_transversals() -> list[Transversal]:
    """The attracting cross-cut as segments of the suspension's bottom.

    [2/3, 5/3) spans the second and third bottom edges exactly, so the
    only split point is the marked image cut 5/3 - ell2/2.  Concatenated
    arc length along these segments is x - 2/3.
    """
    mid = _F(5, 3) - ELL2 / 2
    y0 = _F(0)
    return [
        Transversal(0, PlanarPoint(_F(2, 3), y0), PlanarPoint(mid, y0)),
        Transversal(0, PlanarPoint(mid, y0), PlanarPoint(_F(5, 3), y0)),
    ]


def repelling_transversals(s: Fraction) -> list[Transversal]:
    """The repelling cross-cut for slope s: the bottom arc behind the two
    expanding pieces, split where it wraps through the vertical gluing.
    Concatenated arc length is the unrolled coordinate minus 8/3 - s."""
    s = require_in_repelling_chart(s)
    y0 = _F(0)
    return [
        Transversal(0, PlanarPoint(_F(8, 3) - s, y0), PlanarPoint(_F(3), y0)),
        Transversal(0, PlanarPoint(_F(0), y0), PlanarPoint(_F(2, 3) - s, y0)),
    ]


def shift_chart(partial: PartialAiet, delta: Fraction) -> PartialAiet:
    """Conjugate by x -> x + delta: the same return map read in a chart
    whose origin sits delta to the left."""
    pieces = [
        AffinePiece(p.domain.shift(delta), p.slope, p.offset + delta - p.slope * delta)
        for p in partial.pieces
    ]
    return PartialAiet(
        pieces,
        partial.ambient.shift(delta),
        undefined_intervals=[iv.shift(delta) for iv in partial.undefined_intervals],
        undefined_points=[x + delta for x in partial.undefined_points],
        unresolved=[iv.shift(delta) for iv in partial.unresolved],
    )


def attracting_return_traced(s: Fraction, budget: int = 8) -> PartialAiet:
    """Tracer route to the attracting return, shifted to base coordinates
    so it can be compared piece-for-piece with two_branch_family."""
    s = require_in_sector(s)
    raw = first_return_on_transversal(
        build_surface(), attracting_transversals(), Direction.from_slope(s), budget
    )
    return shift_chart(raw, _F(2, 3))


def repelling_backward_traced(s: Fraction, budget: int = 8) -> PartialAiet:
    """Tracer route to the backward repelling return, in the unrolled
    chart of repelling_backward_family."""
    s = require_in_repelling_chart(s)
    raw = first_return_on_transversal(
        build_surface(),
        repelling_transversals(s),
        Direction.from_slope(s).opposite(),
        budget,
    )
    return shift_chart(raw, _F(8, 3) - s)


def repelling_forward_traced(s: Fraction, budget: int = 48) -> PartialAiet:
    """Forward flow on the repelling cross-cut, traced.

    Leaves over the backward map's hole drain into the attracting side
    and never come back, so they burn the whole budget and are reported
    unresolved; the traced pieces are exactly the two expanding branches.
    """
    s = require_in_repelling_chart(s)
    raw = first_return_on_transversal(
        build_surface(),
        repelling_transversals(s),
        Direction.from_slope(s),
        budget,
    )
    return shift_chart(raw, _F(8, 3) - s)


def closed_leaf_trace(budget: int = 8) -> LeafTrace:
    """Trace the visibly affine closed leaf: one crossing, factor 2."""
    return trace_leaf(
        build_surface(),
        0,
        PlanarPoint(CLOSED_LEAF_BASEPOINT, _F(0)),
        Direction(-2, 1),
        budget,
    )
