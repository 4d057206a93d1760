"""The genus-2 running example, checked from both ends: every closed-form
return map against the surface tracer, and the induction tower against
traced returns on the shrunken cut."""

from fractions import Fraction

import pytest

from folia.disco import (
    ATTRACTING_CUT,
    CLOSED_LEAF_HOLONOMY,
    ELL2,
    attracting_return_traced,
    attracting_transversals,
    base_aiet,
    build_surface,
    closed_leaf_trace,
    normalized_cut,
    repelling_backward_family,
    repelling_backward_traced,
    repelling_chart_sector,
    repelling_forward_return,
    repelling_forward_traced,
    repelling_transversals,
    require_in_sector,
    shift_chart,
    slope_sector,
    two_branch_family,
)
from folia.errors import DirectionOutsideSector
from folia.iet import check_bijective
from folia.interval import Interval
from folia.rauzy import RvState, Terminal, rv_step
from folia.surface import (
    CLOSED,
    Direction,
    PlanarPoint,
    Transversal,
    classify_closed_leaf,
    first_return_on_transversal,
    holonomy_of_closed_trace,
    trace_leaf,
    validate,
)

F = Fraction

# spread over both repelling regimes: backward images wrap through the
# side gluing once s > 1/3
CHART_SLOPES = [F(0), F(1, 10), F(1, 3), F(1, 2), F(3, 5)]


def _bottom_segments(L: Interval) -> list[Transversal]:
    # split at the marked bottom point if the window straddles it
    y0 = F(0)
    cuts = [L.lo, L.hi]
    mid = F(5, 3) - ELL2 / 2
    if L.lo < mid < L.hi:
        cuts.insert(1, mid)
    return [
        Transversal(0, PlanarPoint(a, y0), PlanarPoint(b, y0))
        for a, b in zip(cuts, cuts[1:])
    ]


def test_base_map_is_bijective():
    check_bijective(base_aiet())


def test_base_map_reverses_piece_order():
    T = base_aiet()
    assert [p.slope for p in T.pieces] == [F(2), F(1, 2), F(1, 2), F(2)]
    images = [p.image for p in T.pieces]
    assert images == sorted(images, key=lambda iv: iv.lo, reverse=True)


class TestSurfaceShape:
    def test_validates_to_genus_two_with_two_4pi_cones(self):
        report = validate(build_surface())
        assert report.ok
        assert report.genus == 2
        assert sorted(l for _, l in report.cone_angles) == [2, 2]
        assert sorted(len(cycle) for cycle, _ in report.cone_angles) == [5, 5]

    def test_attracting_cut_is_two_bottom_edges(self):
        first, second = attracting_transversals()
        assert first.start == PlanarPoint(F(2, 3), F(0))
        assert second.end == PlanarPoint(F(5, 3), F(0))
        assert first.end == second.start
        assert first.length + second.length == ATTRACTING_CUT.length


class TestAttractingReturn:
    @pytest.mark.parametrize("s", CHART_SLOPES + [F(9, 10)])
    def test_traced_equals_closed_form(self, s):
        fam = two_branch_family(s)
        traced = attracting_return_traced(s).normalized()
        assert traced.pieces == (fam.branch_a, fam.branch_b)
        assert traced.undefined_intervals == ()
        assert traced.unresolved == ()

    def test_cut_position_tracks_slope(self):
        for s in (F(0), F(1, 7)):
            assert two_branch_family(s).p == F(2, 3) + normalized_cut(s)


class TestInductionTowerVsTracer:
    """Deep cross-oracle: k induction steps shrink the cut, and tracing
    the first return to the shrunken cut must land on the same branches."""

    @pytest.mark.parametrize("s,k", [(F(0), 5), (F(1, 10), 6), (F(1, 4), 4)])
    def test_induced_state_equals_traced_subcut_return(self, s, k):
        state = RvState.initial(two_branch_family(s))
        for _ in range(k):
            out = rv_step(state)
            if isinstance(out, Terminal):
                break
            _, state = out
        assert state.step >= 1
        m = state.map
        traced = shift_chart(
            first_return_on_transversal(
                build_surface(),
                _bottom_segments(m.L),
                Direction.from_slope(s),
                budget=max(state.times) + 3,
            ),
            m.L.lo,
        ).normalized()
        assert traced.pieces == (m.branch_a, m.branch_b)
        assert traced.undefined_intervals == ()


class TestRepellingReturn:
    @pytest.mark.parametrize("s", CHART_SLOPES)
    def test_backward_traced_equals_closed_form(self, s):
        fam = repelling_backward_family(s)
        traced = repelling_backward_traced(s).normalized()
        assert traced.pieces == (fam.branch_a, fam.branch_b)
        assert traced.undefined_intervals == ()
        assert traced.unresolved == ()

    @pytest.mark.parametrize("s", [F(0), F(1, 10), F(1, 2)])
    def test_forward_traced_is_the_branchwise_inverse(self, s):
        combo = repelling_forward_return(s)
        traced = repelling_forward_traced(s).normalized()
        assert traced.pieces == combo.pieces
        hole = repelling_backward_family(s).hole
        assert traced.undefined_intervals == (hole,)
        assert traced.unresolved == (hole,)
        assert combo.undefined_intervals == (hole,)
        assert combo.unresolved == ()

    def test_backward_hole_has_length_half(self):
        for s in (F(0), F(1, 3), F(3, 5)):
            assert repelling_backward_family(s).hole.length == F(1, 2)

    def test_chart_narrower_than_sector(self):
        assert repelling_chart_sector() == Interval(F(0), F(2, 3))
        assert slope_sector() == Interval(F(0), ELL2)
        with pytest.raises(DirectionOutsideSector):
            repelling_backward_family(F(2, 3))
        with pytest.raises(DirectionOutsideSector):
            repelling_transversals(F(3, 4))
        # the attracting side still covers these slopes
        two_branch_family(F(3, 4))


class TestClosedLeaf:
    def test_affine_cylinder_with_factor_two(self):
        tr = closed_leaf_trace()
        assert tr.status == CLOSED
        assert len(tr.events) == 1
        assert tr.accumulated_factor == CLOSED_LEAF_HOLONOMY
        assert holonomy_of_closed_trace(tr) == F(2)
        kind = classify_closed_leaf(tr)
        assert kind.kind == "affine-cylinder"
        assert kind.rho == F(2)

    def test_reversed_orientation_inverts_the_factor(self):
        rev = trace_leaf(
            build_surface(), 0, PlanarPoint(F(1, 3), F(1)), Direction(2, -1), budget=8
        )
        assert rev.status == CLOSED
        assert rev.accumulated_factor == F(1, 2)


class TestSectorGuards:
    def test_rejects_slopes_outside_the_one_pass_cone(self):
        for bad in (ELL2, F(-1, 10), F(1)):
            with pytest.raises(DirectionOutsideSector):
                require_in_sector(bad)

    def test_normalized_cut_complements_slope(self):
        assert normalized_cut(F(0)) == ELL2
        s = F(1, 5)
        assert normalized_cut(s) + s == ELL2
