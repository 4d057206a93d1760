"""Two-branch induction and direction classification.

The induction operates on aligned two-branch states: branch A occupies
[lo, p) with its image pinned to the right end of L, branch B occupies
[p, hi) with its image pinned to the left end, and the single hole sits
between the images.  Each
step restricts to one branch's domain, emits a letter, and yields an
aligned state again; both hole endpoints are preserved exactly and the step
is checked (optionally per call, always in the test suite) against the
generic interval-pushing first-return oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Literal

from .errors import DegenerateBranch, HoleMismatch, NonStandardState, NotFound
from .interval import Interval
from .iet import (
    AffinePiece,
    Aiet,
    Cycle,
    PartialAiet,
    detect_periodic,
    first_return,
)

CASE1 = "case1"
CASE2A = "case2a"
CASE2B = "case2b"
SADDLE_BOUNDARY = "saddle-boundary"

LETTER_L = "L"
LETTER_R = "R"


@dataclass(frozen=True)
class TwoBranchMap:
    """Injective two-branch affine self-map of L, total on L.

    What the map misses is on the image side: the complement
    L - image(A) - image(B) is where iterates can never land.  States the
    induction runs on (the aligned ones) have a SINGLE such hole between
    the two images; general injective inputs with a scattered complement
    are still accepted, since case tests and terminal detection make sense
    for them.
    """

    L: Interval
    p: Fraction
    branch_a: AffinePiece
    branch_b: AffinePiece

    def __post_init__(self) -> None:
        if not (self.L.lo < self.p < self.L.hi):
            raise ValueError("discontinuity must be interior to L")
        if self.branch_a.domain != Interval(self.L.lo, self.p):
            raise ValueError("branch A domain must be [L.lo, p)")
        if self.branch_b.domain != Interval(self.p, self.L.hi):
            raise ValueError("branch B domain must be [p, L.hi)")
        img_a, img_b = self.branch_a.image, self.branch_b.image
        for img in (img_a, img_b):
            if not self.L.contains_interval(img):
                raise ValueError(f"image {img} escapes {self.L}")
        if img_a.overlaps(img_b):
            raise ValueError("branch images overlap; map is not injective")

    @property
    def holes(self) -> tuple[Interval, ...]:
        """Components of L - image(A) - image(B), left to right."""
        return tuple(
            _complement(self.L, [self.branch_a.image, self.branch_b.image])
        )

    @property
    def hole(self) -> Interval:
        holes = self.holes
        if len(holes) != 1:
            raise HoleMismatch(
                f"expected one hole, image complement has {len(holes)} components"
            )
        return holes[0]

    @property
    def slopes(self) -> tuple[Fraction, Fraction]:
        return (self.branch_a.slope, self.branch_b.slope)

    def as_aiet(self) -> Aiet:
        return Aiet([self.branch_a, self.branch_b], self.L)

    def evaluate(self, x: Fraction) -> Fraction:
        return self.branch_a(x) if x < self.p else self.branch_b(x)

    def is_aligned(self) -> bool:
        """Image of A pinned right, image of B pinned left."""
        return (
            self.branch_a.image.hi == self.L.hi
            and self.branch_b.image.lo == self.L.lo
        )


def _complement(L: Interval, images: list[Interval]) -> list[Interval]:
    from .interval import subtract

    return subtract(L, images)


def aligned_state(
    L: Interval, p: Fraction, slope_a: Fraction, slope_b: Fraction
) -> TwoBranchMap:
    """The aligned two-branch map on L with cut p and given slopes."""
    off_a = L.hi - slope_a * p  # f_A(p-) = L.hi
    off_b = L.lo - slope_b * p  # f_B(p) = L.lo
    return TwoBranchMap(
        L,
        p,
        AffinePiece(Interval(L.lo, p), slope_a, off_a),
        AffinePiece(Interval(p, L.hi), slope_b, off_b),
    )


def case_of(m: TwoBranchMap) -> str:
    """Case predicate on exact image inclusions.

    Case 1 iff both images are properly inside the opposite branch domain;
    Case 2a iff only image(B) is properly inside A's domain; Case 2b iff
    only image(A) is properly inside B's domain.  An exact boundary
    coincidence signals a saddle connection; a state matching no predicate
    raises rather than guessing a letter.
    """
    a_dom = Interval(m.L.lo, m.p)
    b_dom = Interval(m.p, m.L.hi)
    img_a, img_b = m.branch_a.image, m.branch_b.image
    a_in = b_dom.strictly_contains(img_a)
    b_in = a_dom.strictly_contains(img_b)
    if (b_dom.contains_interval(img_a) and not a_in) or (
        a_dom.contains_interval(img_b) and not b_in
    ):
        # image exactly equals a branch domain: a branch of the next state
        # would have length zero
        return SADDLE_BOUNDARY
    if img_a.lo == m.p or img_b.hi == m.p:
        return SADDLE_BOUNDARY
    if a_in and b_in:
        return CASE1
    if b_in:
        return CASE2A
    if a_in:
        return CASE2B
    raise NonStandardState(f"no induction case matches {m}")


@dataclass(frozen=True)
class RvState:
    map: TwoBranchMap
    step: int = 0
    word: str = ""
    lengths: tuple[Fraction, ...] = ()
    # exact first-return times of the two current branches in steps of the
    # original map; they grow additively, Stern-Brocot style
    times: tuple[int, int] = (1, 1)

    @classmethod
    def initial(cls, m: TwoBranchMap) -> "RvState":
        return cls(map=m, lengths=(m.L.length,))


@dataclass(frozen=True)
class Terminal:
    kind: Literal["case1", "saddle-connection"]
    state: RvState


def rv_step(state: RvState, check: bool = False) -> tuple[str, RvState] | Terminal:
    """One induction step: emit a letter and the renormalized state.

    With check=True the closed-form result is verified on the spot against
    the generic first-return oracle; the test suite exercises that route on
    every randomized instance, so runtime checking is opt-in.
    """
    m = state.map
    case = case_of(m)
    if case == CASE1:
        return Terminal("case1", state)
    if case == SADDLE_BOUNDARY:
        return Terminal("saddle-connection", state)
    if not m.is_aligned():
        raise NonStandardState(
            "induction is defined for aligned states (A-image pinned right, "
            "B-image pinned left)"
        )
    if not m.holes:
        raise NonStandardState("map is bijective; induction needs an image hole")

    u, v, p = m.L.lo, m.L.hi, m.p
    fa, fb = m.branch_a, m.branch_b
    ta, tb = state.times

    if case == CASE2A:
        # hole is inside A's domain: keep L - B = [u, p), letter R
        letter = LETTER_R
        q = fa.preimage(p)
        if not (u < q < p):
            raise DegenerateBranch(f"cut {q} escapes [{u}, {p})")
        new_map = TwoBranchMap(
            Interval(u, p),
            q,
            fa.restrict(Interval(u, q)),
            fb.compose_after(fa).restrict(Interval(q, p)),
        )
        new_times = (ta, ta + tb)
    else:
        # hole is inside B's domain: keep L - A = [p, v), letter L
        letter = LETTER_L
        r = fb.preimage(p)
        if not (p < r < v):
            raise DegenerateBranch(f"cut {r} escapes ({p}, {v})")
        new_map = TwoBranchMap(
            Interval(p, v),
            r,
            fa.compose_after(fb).restrict(Interval(p, r)),
            fb.restrict(Interval(r, v)),
        )
        new_times = (ta + tb, tb)

    # Both hole endpoints survive every step: the hole is the same set.
    assert new_map.hole == m.hole
    assert new_map.is_aligned()

    if check:
        assert_matches_first_return(m, letter, new_map)

    next_state = RvState(
        map=new_map,
        step=state.step + 1,
        word=state.word + letter,
        lengths=state.lengths + (new_map.L.length,),
        times=new_times,
    )
    return letter, next_state


def assert_matches_first_return(
    m: TwoBranchMap, letter: str, new_map: TwoBranchMap
) -> None:
    """Oracle: the step must equal interval-pushing first return exactly."""
    keep = (
        Interval(m.L.lo, m.p) if letter == LETTER_R else Interval(m.p, m.L.hi)
    )
    oracle: PartialAiet = first_return(m.as_aiet(), [keep], budget=8).normalized()
    got = [new_map.branch_a, new_map.branch_b]
    assert len(oracle.pieces) == 2, f"oracle produced {oracle.pieces}"
    for ours, ref in zip(got, oracle.pieces):
        assert ours.domain == ref.domain, (ours, ref)
        assert ours.slope == ref.slope, (ours, ref)
        assert ours.offset == ref.offset, (ours, ref)
    assert oracle.undefined_intervals == ()


@dataclass(frozen=True)
class ClassificationReport:
    outcome: Literal["morse-smale", "saddle-connection", "undetermined"]
    word: str
    step: int | None = None
    depth: int | None = None
    cycle: tuple[Fraction, ...] | None = None
    period: int | None = None
    multiplier: Fraction | None = None
    # "iterated" when detect_periodic walked the full cycle; "induced" when
    # the period is too large to walk and the Case-1 two-cycle is the witness
    cycle_verification: str | None = None
    final_state: RvState | None = None


# Walking a cycle costs one exact evaluation per step; beyond this many
# steps the induced two-cycle witness is reported instead.
CYCLE_WALK_CAP = 20_000


def classify(
    m: TwoBranchMap, max_depth: int, check_steps: bool = False
) -> ClassificationReport:
    """Run the induction to a terminal state or to depth exhaustion.

    A Case-1 terminal yields a Morse-Smale verdict together with the
    attracting cycle of the ORIGINAL map: its period is the sum of the two
    return times, its multiplier the product of the two final slopes
    (provably < 1), and the cycle itself is found by iteration when the
    period is walkable and from the induced two-cycle otherwise.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    state = RvState.initial(m)
    while state.step < max_depth:
        result = rv_step(state, check=check_steps)
        if isinstance(result, Terminal):
            if result.kind == "saddle-connection":
                return ClassificationReport(
                    outcome="saddle-connection",
                    word=state.word,
                    step=state.step,
                    final_state=state,
                )
            return _morse_smale_report(m, result.state)
        _, state = result
    return ClassificationReport(
        outcome="undetermined", word=state.word, depth=max_depth, final_state=state
    )


def _morse_smale_report(m: TwoBranchMap, state: RvState) -> ClassificationReport:
    fin = state.map
    ta, tb = state.times
    period = ta + tb
    multiplier = fin.branch_a.slope * fin.branch_b.slope
    assert multiplier < 1  # strict Case-1 inclusions force contraction
    # Induced two-cycle: fixed point of branch_b o branch_a, solved exactly.
    comp = fin.branch_b.compose_after(fin.branch_a)
    y_a = comp.offset / (1 - comp.slope)
    y_b = fin.branch_a(y_a)
    assert y_a in fin.branch_a.domain and y_b in fin.branch_b.domain
    assert fin.branch_b(y_b) == y_a

    if period <= CYCLE_WALK_CAP:
        starts = [y_a] + [h.midpoint for h in m.holes]
        cycles = [
            c
            for c in detect_periodic(m.as_aiet(), budget=max(4 * period, 64), starts=starts)
            if c.classification == "attracting"
        ]
        for c in cycles:
            if y_a in c.points:
                assert c.period == period
                assert c.multiplier == multiplier
                return ClassificationReport(
                    outcome="morse-smale",
                    word=state.word,
                    step=state.step,
                    cycle=c.points,
                    period=c.period,
                    multiplier=c.multiplier,
                    cycle_verification="iterated",
                    final_state=state,
                )
        raise AssertionError("induced cycle not recovered by iteration")
    return ClassificationReport(
        outcome="morse-smale",
        word=state.word,
        step=state.step,
        cycle=(y_a, y_b),
        period=period,
        multiplier=multiplier,
        cycle_verification="induced",
        final_state=state,
    )


def word_of(m: TwoBranchMap, max_depth: int) -> str:
    return classify(m, max_depth).word


def word_to_direction_interval(
    prefix: str,
    max_bisection: int = 64,
    family: Callable[[Fraction], TwoBranchMap] | None = None,
    sector: Interval | None = None,
    depth: int | None = None,
) -> tuple[tuple[Fraction, Fraction], list[Fraction]]:
    """A closed rational-slope interval realizing a word prefix.

    Searches the slope sector by exact-midpoint bisection for a sample
    whose classification word starts with `prefix`, then pushes the
    interval's ends outward by bisection against known-failing slopes.  No
    monotonicity of prefixes in the slope is assumed: the result is
    certified by classifying its endpoints and midpoint, and the certified
    sample slopes are returned alongside.
    """
    if not prefix or any(c not in (LETTER_L, LETTER_R) for c in prefix):
        raise ValueError("prefix must be a nonempty word over {L, R}")
    if family is None or sector is None:
        from .disco import slope_sector, two_branch_family

        family = family or two_branch_family
        sector = sector or slope_sector()
    if depth is None:
        depth = max(2 * len(prefix), 16)

    def realizes(s: Fraction) -> bool:
        try:
            return word_of(family(s), depth).startswith(prefix)
        except (NonStandardState, DegenerateBranch):
            return False

    # Breadth-first over dyadic midpoints of the sector.
    queue = [sector]
    hit: Fraction | None = None
    for _ in range(max_bisection):
        iv = queue.pop(0)
        mid = iv.midpoint
        if realizes(mid):
            hit = mid
            break
        queue.append(Interval(iv.lo, mid))
        queue.append(Interval(mid, iv.hi))
    if hit is None:
        raise NotFound(f"no slope realizing {prefix!r} within budget")

    def boundary(inside: Fraction, outside: Fraction) -> Fraction:
        # Shrink toward `inside`, keeping the invariant that `inside`
        # realizes the prefix.
        for _ in range(max_bisection):
            mid = (inside + outside) / 2
            if realizes(mid):
                inside = mid
            else:
                outside = mid
        return inside

    lo = sector.lo if realizes(sector.lo) else boundary(hit, sector.lo)
    # The upper sector endpoint is not itself a valid slope (branch A
    # degenerates there), so certify a hair inside.
    hi_probe = hit + (sector.hi - hit) * Fraction(1023, 1024)
    hi = hi_probe if realizes(hi_probe) else boundary(hit, hi_probe)
    samples = sorted({lo, (lo + hi) / 2, hi})
    assert all(realizes(s) for s in samples)
    return (lo, hi), samples
