"""Rebuilding exchanges from sampled orbits via atomic measures.

The frozen decimals in the golden-rotation tests come from an independent
brute-force script kept outside the package; exact values are asserted with
Fraction equality, measured ones through pytest.approx at the precision the
script reported.
"""

import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings
import hypothesis.strategies as st

from folia.attractor import build_attractor
from folia.disco import two_branch_family
from folia.errors import DisplacementCheckFailed, OrbitTooShort, OutOfDomain
from folia.gutierrez import (
    AtomicMeasure,
    ConjugacyApprox,
    OrbitSample,
    build_h,
    circle_singularities,
    extract_iet,
    measure_of_interval,
    sample_orbit,
    snap_rational,
    verify_displacement,
)
from folia.iet import Aiet, AffinePiece, PartialAiet
from folia.interval import Interval
from folia.rauzy import TwoBranchMap

UNIT = Interval(F(0), F(1))


def rotation(alpha: F) -> Aiet:
    """Circle rotation x -> x + alpha mod 1 as a two-piece exchange."""
    return Aiet([
        AffinePiece(Interval(F(0), 1 - alpha), F(1), alpha),
        AffinePiece(Interval(1 - alpha, F(1)), F(1), alpha - 1),
    ])


def cycle_trap() -> TwoBranchMap:
    # x/4 + 3/4 on [0, 1/2), (x - 1/2)/4 + 1/8 on [1/2, 1): every orbit
    # spirals onto the two-cycle {1/5, 4/5} without ever landing on it
    return TwoBranchMap(
        UNIT,
        F(1, 2),
        AffinePiece(Interval(F(0), F(1, 2)), F(1, 4), F(3, 4)),
        AffinePiece(Interval(F(1, 2), F(1)), F(1, 4), F(0)),
    )


def same_piece_pairs(points, cut, basepoint, seed, draws):
    """Random index pairs plus all adjacent-in-position ones, both filtered
    to lie on a common side of the cut."""
    n = len(points)
    rng = random.Random(seed)
    pairs = []
    for _ in range(draws):
        i, j = rng.sample(range(n), 2)
        if (points[i] < cut) == (points[j] < cut):
            pairs.append((points[i], points[j]))
    order = sorted(range(n), key=lambda i: (points[i] - basepoint) % 1)
    for k in range(n - 1):
        i, j = order[k], order[k + 1]
        if (points[i] < cut) == (points[j] < cut):
            pairs.append((points[i], points[j]))
    return pairs


# rotation by 1/8 sampled four steps: points 0, 1/8, 1/4, 3/8
ROT8 = rotation(F(1, 8))
SAMPLE8 = sample_orbit(ROT8, F(0), 4)


class TestOrbitSample:
    def test_points_must_be_nonempty_distinct_and_inside(self):
        with pytest.raises(ValueError, match="at least one"):
            OrbitSample(None, UNIT, ())
        with pytest.raises(ValueError, match="distinct"):
            OrbitSample(None, UNIT, (F(0), F(1, 2), F(0)))
        with pytest.raises(ValueError, match="ambient"):
            OrbitSample(None, UNIT, (F(0), F(3, 2)))

    def test_max_gap_is_the_widest_cyclic_hole(self):
        s = OrbitSample(None, UNIT, (F(0), F(1, 4), F(5, 8)))
        # arcs: 1/4, 3/8, and 3/8 wrapping through the seam
        assert s.max_gap == F(3, 8)
        assert len(s) == 3

    def test_single_point_sample_has_the_full_circle_as_gap(self):
        s = OrbitSample(None, UNIT, (F(1, 3),))
        assert s.max_gap == F(1)

    def test_sample_orbit_records_the_walk(self):
        assert SAMPLE8.points == (F(0), F(1, 8), F(1, 4), F(3, 8))
        assert SAMPLE8.transform is ROT8
        assert SAMPLE8.singular == ()

    def test_sample_orbit_rejects_bad_requests(self):
        with pytest.raises(ValueError):
            sample_orbit(ROT8, F(0), 0)
        with pytest.raises(OutOfDomain):
            sample_orbit(ROT8, F(2), 3)

    def test_periodic_orbit_closes_up(self):
        with pytest.raises(OrbitTooShort, match="closes up after 4 of 5"):
            sample_orbit(rotation(F(1, 4)), F(0), 5)
        # exactly the period is still fine
        s = sample_orbit(rotation(F(1, 4)), F(0), 4)
        assert s.max_gap == F(1, 4)

    def test_partially_defined_orbit_stops_at_the_hole(self):
        half = PartialAiet(
            [AffinePiece(Interval(F(0), F(1, 2)), F(1), F(1, 4))],
            UNIT,
            undefined_intervals=[Interval(F(1, 2), F(1))],
        )
        with pytest.raises(OrbitTooShort, match="undefined point after 3"):
            sample_orbit(half, F(0), 4)


class TestAtomicMeasure:
    def test_beta_and_size_bounds(self):
        for beta in (F(0), F(1), F(-1, 2), F(3, 2)):
            with pytest.raises(ValueError):
                AtomicMeasure(beta, 3)
        with pytest.raises(ValueError):
            AtomicMeasure(F(1, 2), 0)

    def test_half_weights_by_hand(self):
        m = AtomicMeasure(F(1, 2), 4)
        assert m.weights == (F(1, 2), F(1, 4), F(1, 8), F(1, 16))
        assert m.tail_mass == F(1, 16)
        assert m.sampled_mass == F(15, 16)

    @given(
        beta=st.fractions(min_value=F(1, 100), max_value=F(99, 100), max_denominator=100),
        size=st.integers(min_value=1, max_value=40),
    )
    @settings(max_examples=150)
    def test_weights_plus_tail_carry_unit_mass_exactly(self, beta, size):
        m = AtomicMeasure(beta, size)
        assert sum(m.weights) + m.tail_mass == 1
        # each point hands the next one 1-beta of its mass
        assert all(b == (1 - beta) * a for a, b in zip(m.weights, m.weights[1:]))


class TestMeasureOfInterval:
    def test_arc_holding_only_the_first_point(self):
        m = AtomicMeasure(F(1, 2), 4)
        assert measure_of_interval(m, SAMPLE8, (F(7, 8), F(1, 16))) == F(1, 2)

    def test_full_circle_minus_a_point_misses_only_the_tail(self):
        m = AtomicMeasure(F(1, 2), 4)
        assert measure_of_interval(m, SAMPLE8, (F(1, 16), F(17, 16))) == F(15, 16)

    def test_endpoints_never_count(self):
        m = AtomicMeasure(F(1, 2), 4)
        # 0 and 1/4 sit on the boundary; only 1/8 is strictly inside
        assert measure_of_interval(m, SAMPLE8, (F(0), F(1, 4))) == F(1, 4)

    def test_forward_image_scales_mass_by_one_minus_beta(self):
        # the arc and its image avoid the first and last sample points, so
        # the shift of weights is exact
        m = AtomicMeasure(F(1, 3), 4)
        sigma = (F(1, 16), F(5, 16))
        image = (F(3, 16), F(7, 16))
        assert measure_of_interval(m, SAMPLE8, image) == (
            (1 - F(1, 3)) * measure_of_interval(m, SAMPLE8, sigma)
        )

    def test_size_mismatch_and_empty_arc_are_rejected(self):
        with pytest.raises(ValueError, match="size"):
            measure_of_interval(AtomicMeasure(F(1, 2), 3), SAMPLE8, (F(0), F(1, 2)))
        with pytest.raises(ValueError, match="empty"):
            measure_of_interval(AtomicMeasure(F(1, 2), 4), SAMPLE8, (F(1, 3), F(1, 3)))

    @given(
        a=st.fractions(min_value=0, max_value=F(63, 64), max_denominator=64),
        b=st.fractions(min_value=0, max_value=F(63, 64), max_denominator=64),
    )
    @settings(max_examples=120)
    def test_opposite_arcs_and_endpoint_masses_partition_the_total(self, a, b):
        assume(a != b)
        m = AtomicMeasure(F(1, 3), 4)
        at = dict(zip(SAMPLE8.points, m.weights))
        split = (
            measure_of_interval(m, SAMPLE8, (a, b))
            + measure_of_interval(m, SAMPLE8, (b, a))
            + at.get(a, 0)
            + at.get(b, 0)
        )
        assert split == m.sampled_mass


class TestBuildH:
    # rotation by 1/4 sampled over its full period; beta = 1/2 gives
    # weights (1/2, 1/4, 1/8, 1/16)/(15/16) and the basepoint falls at 1/8,
    # so walking the circle meets p2, p3, p4, p1 in that order
    @pytest.fixture()
    def quarter(self):
        s = sample_orbit(rotation(F(1, 4)), F(0), 4)
        return build_h(s, betas=[F(1, 2)], density_threshold=F(1, 4))

    def test_default_basepoint_splits_the_first_widest_gap(self, quarter):
        assert quarter.basepoint == F(1, 8)

    def test_table_by_hand(self, quarter):
        assert quarter.tables[0] == (F(7, 15), F(0), F(4, 15), F(2, 5))
        assert quarter.h == quarter.tables[-1]

    def test_value_at_agrees_with_the_table_and_wraps_to_one(self, quarter):
        assert quarter.h_at(F(1, 4)) == F(0)
        assert quarter.h_at(F(3, 10)) == F(4, 15)
        assert quarter.h_at(quarter.basepoint) == F(0)
        # past the last sample point the cumulative mass closes the circle
        assert quarter.h_at(F(1, 16)) == F(1)

    def test_tables_equal_normalised_direct_measures(self, quarter):
        m = AtomicMeasure(F(1, 2), 4)
        s = quarter.sample
        for i, p in enumerate(s.points):
            expected = measure_of_interval(m, s, (quarter.basepoint, p))
            assert quarter.tables[0][i] == expected / m.sampled_mass

    def test_h_increases_along_the_circle(self, quarter):
        s = quarter.sample
        pos = [(p - quarter.basepoint) % 1 for p in s.points]
        seq = [quarter.tables[0][i] for i in sorted(range(4), key=lambda i: pos[i])]
        assert seq == sorted(seq) and len(set(seq)) == 4

    def test_beta_list_validation(self):
        s = sample_orbit(rotation(F(1, 4)), F(0), 4)
        with pytest.raises(ValueError, match="at least one"):
            build_h(s, betas=[], density_threshold=F(1, 4))
        with pytest.raises(ValueError, match=r"\(0, 1/2\]"):
            build_h(s, betas=[F(2, 3)], density_threshold=F(1, 4))
        with pytest.raises(ValueError, match="decrease"):
            build_h(s, betas=[F(1, 8), F(1, 8)], density_threshold=F(1, 4))

    def test_basepoint_may_not_be_sampled(self):
        s = sample_orbit(rotation(F(1, 4)), F(0), 4)
        with pytest.raises(ValueError, match="basepoint"):
            build_h(s, betas=[F(1, 2)], basepoint=F(1, 2), density_threshold=F(1, 4))

    def test_sparse_samples_are_refused_by_default(self):
        s = sample_orbit(rotation(F(1, 4)), F(0), 4)
        with pytest.raises(OrbitTooShort, match="density"):
            build_h(s, betas=[F(1, 2)])


class TestDisplacement:
    def test_single_pair_violation_by_hand(self):
        s = sample_orbit(rotation(F(1, 4)), F(0), 4)
        a = build_h(s, betas=[F(1, 2)], density_threshold=F(1, 4))
        # h jumps unevenly at beta = 1/2, so even a rotation shows a gap:
        # |h(1/4)-h(1/2)| = 4/15 against |h(1/2)-h(3/4)| = 2/15
        rep = verify_displacement(a, pairs=[(F(1, 4), F(1, 2))], tolerance=F(1, 2))
        assert rep.per_beta_max == (F(2, 15),)
        assert rep.pair_count == 1
        assert rep.passed and rep.improving

    def test_no_pairs_is_an_error(self):
        s = sample_orbit(rotation(F(1, 4)), F(0), 4)
        a = build_h(s, betas=[F(1, 2)], density_threshold=F(1, 4))
        with pytest.raises(ValueError, match="no pairs"):
            verify_displacement(a, pairs=[])


class TestCircleSingularities:
    def test_rotations_are_continuous_on_the_circle(self):
        assert circle_singularities(rotation(F(1, 3))) == ()
        assert circle_singularities(ROT8) == ()

    def test_slope_break_with_matching_values_is_invisible(self):
        T = Aiet([
            AffinePiece(Interval(F(0), F(1, 2)), F(1, 2), F(0)),
            AffinePiece(Interval(F(1, 2), F(1)), F(3, 2), F(-1, 2)),
        ])
        assert circle_singularities(T) == ()

    def test_three_piece_swap_jumps_everywhere(self):
        T = Aiet([
            AffinePiece(Interval(F(0), F(1, 3)), F(1), F(2, 3)),
            AffinePiece(Interval(F(1, 3), F(2, 3)), F(1), F(0)),
            AffinePiece(Interval(F(2, 3), F(1)), F(1), F(-2, 3)),
        ])
        assert circle_singularities(T) == (F(0), F(1, 3), F(2, 3))

    def test_aligned_two_branch_contraction_jumps_only_at_the_seam(self):
        f = two_branch_family(F(1, 7))
        assert circle_singularities(f) == (f.L.lo,)


class TestSnapRational:
    def test_pi_at_two_tolerances(self):
        assert snap_rational(math.pi, F(1, 10**4)) == F(333, 106)
        assert snap_rational(math.pi, F(1, 10**5)) == F(355, 113)

    def test_sign_integer_and_exact_inputs(self):
        assert snap_rational(-0.3333, F(1, 1000)) == F(-1, 3)
        assert snap_rational(F(7), F(1, 10)) == F(7)
        assert snap_rational(0.0, F(1, 10**6)) == 0
        assert snap_rational(F(610, 987), F(1, 10**9)) == F(610, 987)

    def test_tolerance_must_be_positive(self):
        with pytest.raises(ValueError):
            snap_rational(0.5, F(0))


# -- the golden rotation: 34/55 over one period ------------------------------


@pytest.fixture(scope="module")
def golden_sample():
    return sample_orbit(rotation(F(34, 55)), F(0), 55)


@pytest.fixture(scope="module")
def golden(golden_sample):
    return build_h(
        golden_sample,
        betas=[F(1, 2**k) for k in range(4, 9)],
        density_threshold=F(1, 50),
    )


@pytest.fixture(scope="module")
def golden_pairs(golden, golden_sample):
    return same_piece_pairs(
        golden_sample.points, 1 - F(34, 55), golden.basepoint, seed=7, draws=150
    )


class TestGoldenRotation:
    def test_sample_and_basepoint(self, golden_sample, golden):
        assert golden_sample.max_gap == F(1, 55)
        assert golden.basepoint == F(1, 110)
        assert golden.betas == tuple(F(1, 2**k) for k in range(4, 9))

    def test_cauchy_differences_shrink(self, golden):
        got = [float(c) for c in golden.cauchy_max]
        assert got == pytest.approx(
            [0.029595, 0.013206, 0.006198, 0.002977], abs=2e-6
        )
        assert all(a >= b for a, b in zip(golden.cauchy_max, golden.cauchy_max[1:]))

    def test_tables_are_monotone_along_the_circle(self, golden, golden_sample):
        pos = [(p - golden.basepoint) % 1 for p in golden_sample.points]
        order = sorted(range(55), key=lambda i: pos[i])
        for table in golden.tables:
            seq = [table[i] for i in order]
            assert all(a < b for a, b in zip(seq, seq[1:]))

    def test_translation_distances_flatten_as_beta_shrinks(self, golden, golden_pairs):
        rep = verify_displacement(golden, pairs=golden_pairs, tolerance=F(1, 2**8))
        assert rep.pair_count == 124
        got = [float(v) for v in rep.per_beta_max]
        assert got == pytest.approx(
            [0.062377, 0.031037, 0.015445, 0.007698, 0.003842], abs=2e-6
        )
        assert rep.improving
        assert rep.passed and rep.final_max <= F(1, 2**8)

    def test_default_pairs_walk_the_circle(self, golden):
        rep = verify_displacement(golden, tolerance=F(1, 2**8))
        assert rep.pair_count == 54
        assert rep.passed
        assert float(rep.final_max) == pytest.approx(0.003842, abs=2e-6)

    def test_extraction_recovers_the_rotation(self, golden, golden_pairs):
        ex = extract_iet(golden, tolerance=F(1, 100), pairs=golden_pairs)
        assert not ex.snapped and ex.pullback_found
        assert len(ex.cuts_raw) == 1
        b = ex.cuts_raw[0]
        assert float(b) == pytest.approx(0.37989792, abs=1e-7)
        # the one cut is h at the preimage of the basepoint
        assert b == golden.h_at(F(43, 110))
        assert [float(m) for m in ex.medians] == pytest.approx(
            [0.6169711, -0.38107078], abs=1e-7
        )
        # translations come from the cuts, not the medians
        assert ex.translations == (1 - b, -b)
        assert ex.translations[1] == ex.translations[0] - 1
        assert abs(ex.translations[0] - F(34, 55)) < F(1, 100)
        assert float(ex.median_error) == pytest.approx(0.003131, abs=1e-5)
        assert ex.iet.is_iet()
        assert [p.domain for p in ex.iet.pieces] == [
            Interval(F(0), b), Interval(b, F(1)),
        ]

    def test_snapped_extraction_lands_on_three_eighths(self, golden, golden_pairs):
        ex = extract_iet(golden, tolerance=F(1, 100), snap=True, pairs=golden_pairs)
        assert ex.snapped
        assert ex.cuts == (F(3, 8),)
        assert ex.translations == (F(5, 8), F(-3, 8))
        # coarser than the raw rebuild but still within this tolerance
        assert abs(ex.translations[0] - F(34, 55)) == F(3, 440)

    def test_precomputed_gate_is_honoured(self, golden, golden_pairs):
        rep = verify_displacement(golden, pairs=golden_pairs, tolerance=F(1, 100))
        a = extract_iet(golden, tolerance=F(1, 100), pairs=golden_pairs)
        b = extract_iet(golden, tolerance=F(1, 100), gate=rep)
        assert a.iet == b.iet and a.cuts == b.cuts
        with pytest.raises(DisplacementCheckFailed, match="exceeds"):
            extract_iet(golden, tolerance=F(1, 1000), gate=rep)

    def test_too_tight_tolerance_refuses_extraction(self, golden, golden_pairs):
        with pytest.raises(DisplacementCheckFailed):
            extract_iet(golden, tolerance=F(1, 1000), pairs=golden_pairs)


# -- collapse onto the attractor ---------------------------------------------


@pytest.fixture(scope="module")
def collapse():
    f = two_branch_family(F(1, 7))
    sample = sample_orbit(f, f.L.lo, 250)
    approx = build_h(
        sample,
        betas=[F(1, 2**k) for k in range(4, 9)],
        basepoint=f.hole.midpoint,
        density_threshold=F(3, 5),
    )
    return f, sample, approx


class TestCollapse:
    """A contraction's gaps carry no orbit mass, so h flattens them."""

    def test_boundary_orbit_misses_every_gap(self, collapse):
        f, sample, approx = collapse
        cantor = build_attractor(f, f.hole, 8)
        for gap in cantor.gap_list.intervals():
            assert all(not (gap.lo < p < gap.hi) for p in sample.points)

    def test_h_is_constant_across_each_gap_interior(self, collapse):
        f, sample, approx = collapse
        cantor = build_attractor(f, f.hole, 8)
        seen = 0
        for gap in cantor.gap_list.intervals():
            probes = [gap.lo + gap.length * F(k, 4) for k in (1, 2, 3)]
            if approx.basepoint in gap:
                continue
            assert len({approx.h_at(p) for p in probes}) == 1
            seen += 1
        assert seen >= 10

    def test_the_basepoint_gap_splits_into_zero_and_one(self, collapse):
        f, sample, approx = collapse
        hole = f.hole
        assert approx.basepoint == hole.midpoint
        eps = hole.length / 8
        assert approx.h_at(approx.basepoint + eps) == F(0)
        assert approx.h_at(hole.hi - eps) == F(0)
        assert approx.h_at(approx.basepoint - eps) == F(1)
        assert approx.h_at(hole.lo + eps) == F(1)

    def test_default_density_gate_rejects_the_sparse_boundary_orbit(self, collapse):
        f, sample, approx = collapse
        with pytest.raises(OrbitTooShort, match="density"):
            build_h(sample, betas=[F(1, 16)], basepoint=f.hole.midpoint)

    def test_orbit_attracted_to_a_cycle_starves_the_sample(self):
        trap = cycle_trap()
        sample = sample_orbit(trap, F(1, 3), 40)
        # the walk never repeats exactly, but it piles up on the two-cycle
        # and leaves most of the circle unsampled
        assert sample.max_gap > F(1, 4)
        with pytest.raises(OrbitTooShort, match="density"):
            build_h(sample, betas=[F(1, 16)])
