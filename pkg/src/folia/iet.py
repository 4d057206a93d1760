"""Standard and affine interval exchange maps with exact dynamics.

Everything here is a pure function of immutable values over arbitrary
precision rationals.  Periodicity is decided by exact equality, never by
tolerance; first-return maps are built by interval pushing so the result is
a certified piecewise-affine map rather than a pointwise sample.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import NotBijective, OutOfDomain
from .interval import Interval, disjoint_sorted, subtract, tiles_exactly
from .rational import format_rat

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class AffinePiece:
    """One branch x |-> slope*x + offset on a half-open domain."""

    domain: Interval
    slope: Fraction
    offset: Fraction

    def __post_init__(self) -> None:
        if self.slope <= 0:
            raise ValueError("slope must be positive (orientation preserving)")

    @property
    def image(self) -> Interval:
        return Interval(self(self.domain.lo), self(self.domain.hi))

    def __call__(self, x: Fraction) -> Fraction:
        return self.slope * x + self.offset

    def preimage(self, y: Fraction) -> Fraction:
        return (y - self.offset) / self.slope

    def inverted(self) -> "AffinePiece":
        return AffinePiece(self.image, 1 / self.slope, -self.offset / self.slope)

    def compose_after(self, inner: "AffinePiece") -> "AffinePiece":
        """The map self(inner(x)) on inner's domain (image fit unchecked)."""
        return AffinePiece(
            inner.domain,
            self.slope * inner.slope,
            self.slope * inner.offset + self.offset,
        )

    def restrict(self, sub: Interval) -> "AffinePiece":
        if not self.domain.contains_interval(sub):
            raise ValueError(f"{sub} not inside {self.domain}")
        return AffinePiece(sub, self.slope, self.offset)

    def __repr__(self) -> str:
        return (
            f"{self.domain} -> x*{format_rat(self.slope)}"
            f"{'+' if self.offset >= 0 else ''}{format_rat(self.offset)}"
        )


def _check_pieces(pieces: Sequence[AffinePiece]) -> list[AffinePiece]:
    out = sorted(pieces, key=lambda p: p.domain.lo)
    for a, b in zip(out, out[1:]):
        if a.domain.hi > b.domain.lo:
            raise ValueError(f"overlapping domains {a.domain} and {b.domain}")
    return out


class _PiecewiseAffine:
    """Shared exact-evaluation machinery for total and partial maps."""

    pieces: tuple[AffinePiece, ...]
    ambient: Interval

    def piece_at(self, x: Fraction) -> AffinePiece | None:
        # Linear scan is deliberate: piece counts stay small in this package
        # and exact comparisons dominate the cost anyway.
        for p in self.pieces:
            if x in p.domain:
                return p
        return None

    def evaluate(self, x: Fraction) -> Fraction | None:
        """Value at x, or None where the map is undefined."""
        p = self.piece_at(x)
        return p(x) if p is not None else None

    @property
    def breakpoints(self) -> list[Fraction]:
        """Interior domain subdivision points, in increasing order."""
        return [p.domain.lo for p in self.pieces[1:]]

    @property
    def slopes(self) -> tuple[Fraction, ...]:
        return tuple(p.slope for p in self.pieces)

    def is_iet(self) -> bool:
        return all(p.slope == 1 for p in self.pieces)


@dataclass(frozen=True)
class Aiet(_PiecewiseAffine):
    """Affine interval exchange: piece domains tile the ambient interval.

    Bijectivity is a certificate (`check_bijective`), not a construction
    invariant, so non-surjective exchanges used as induction input are
    representable too.
    """

    pieces: tuple[AffinePiece, ...]
    ambient: Interval

    def __init__(self, pieces: Iterable[AffinePiece], ambient: Interval | None = None):
        ordered = _check_pieces(list(pieces))
        if not ordered:
            raise ValueError("need at least one piece")
        if ambient is None:
            ambient = Interval(ordered[0].domain.lo, ordered[-1].domain.hi)
        if not tiles_exactly(ambient, [p.domain for p in ordered]):
            raise ValueError("piece domains must tile the ambient interval")
        object.__setattr__(self, "pieces", tuple(ordered))
        object.__setattr__(self, "ambient", ambient)

    def evaluate(self, x: Fraction) -> Fraction | None:
        if x not in self.ambient:
            raise OutOfDomain(f"{x} outside {self.ambient}")
        return super().evaluate(x)

    def __call__(self, x: Fraction) -> Fraction:
        y = self.evaluate(x)
        assert y is not None  # domains tile ambient
        return y

    @property
    def images(self) -> list[Interval]:
        return [p.image for p in self.pieces]


@dataclass(frozen=True)
class PartialAiet(_PiecewiseAffine):
    """Piecewise-affine map that may be undefined on part of its ambient.

    undefined_intervals and piece domains together cover the ambient;
    undefined_points flag isolated parameters (singular leaves) which may
    lie inside piece domains: evaluation is Undefined there even though a
    right-limit continuation exists.
    """

    pieces: tuple[AffinePiece, ...]
    ambient: Interval
    undefined_intervals: tuple[Interval, ...] = ()
    undefined_points: tuple[Fraction, ...] = ()
    unresolved: tuple[Interval, ...] = ()  # budget-exhausted subset

    def __init__(
        self,
        pieces: Iterable[AffinePiece],
        ambient: Interval,
        undefined_intervals: Iterable[Interval] = (),
        undefined_points: Iterable[Fraction] = (),
        unresolved: Iterable[Interval] = (),
    ):
        ordered = _check_pieces(list(pieces))
        holes = disjoint_sorted(undefined_intervals)
        covered = sorted(
            [p.domain for p in ordered] + holes, key=lambda iv: iv.lo
        )
        if not tiles_exactly(ambient, covered):
            raise ValueError("pieces plus undefined intervals must cover ambient")
        object.__setattr__(self, "pieces", tuple(ordered))
        object.__setattr__(self, "ambient", ambient)
        object.__setattr__(self, "undefined_intervals", tuple(holes))
        object.__setattr__(self, "undefined_points", tuple(sorted(set(undefined_points))))
        object.__setattr__(self, "unresolved", tuple(unresolved))

    def evaluate(self, x: Fraction) -> Fraction | None:
        if x not in self.ambient:
            raise OutOfDomain(f"{x} outside {self.ambient}")
        if x in self.undefined_points:
            return None
        return super().evaluate(x)

    @property
    def images(self) -> list[Interval]:
        return [p.image for p in self.pieces]

    def normalized(self) -> "PartialAiet":
        """Merge adjacent pieces whose affine formulas agree.

        The interval pusher splits at every breakpoint preimage; splits
        where the map is actually continuous are representation noise.
        """
        merged: list[AffinePiece] = []
        for p in self.pieces:
            if (
                merged
                and merged[-1].domain.hi == p.domain.lo
                and merged[-1].slope == p.slope
                and merged[-1].offset == p.offset
            ):
                prev = merged.pop()
                merged.append(
                    AffinePiece(
                        Interval(prev.domain.lo, p.domain.hi), p.slope, p.offset
                    )
                )
            else:
                merged.append(p)
        return PartialAiet(
            merged,
            self.ambient,
            self.undefined_intervals,
            self.undefined_points,
            self.unresolved,
        )


@dataclass(frozen=True)
class BijectivityCertificate:
    bijective: bool
    image_gaps: tuple[Interval, ...]
    image_overlaps: tuple[Interval, ...]


def check_bijective(T: Aiet) -> BijectivityCertificate:
    """Certify that the images tile the ambient interval exactly."""
    images = sorted(T.images, key=lambda iv: iv.lo)
    overlaps: list[Interval] = []
    for a, b in zip(images, images[1:]):
        cut = a.intersect(b)
        if cut is not None:
            overlaps.append(cut)
    gaps: list[Interval] = []
    if not overlaps:
        gaps = subtract(T.ambient, images)
    else:
        # With overlaps present a gap list is still useful diagnostically:
        # subtract the merged cover instead.
        cover: list[Interval] = []
        for iv in images:
            if cover and iv.lo <= cover[-1].hi:
                if iv.hi > cover[-1].hi:
                    cover[-1] = Interval(cover[-1].lo, iv.hi)
            else:
                cover.append(iv)
        gaps = subtract(T.ambient, cover)
    outside = [iv for iv in images if not T.ambient.contains_interval(iv)]
    ok = not overlaps and not gaps and not outside
    return BijectivityCertificate(ok, tuple(gaps), tuple(overlaps))


def invert(T: Aiet) -> Aiet:
    cert = check_bijective(T)
    if not cert.bijective:
        raise NotBijective(
            f"map is not bijective (gaps={list(cert.image_gaps)}, "
            f"overlaps={list(cert.image_overlaps)})"
        )
    return Aiet([p.inverted() for p in T.pieces], T.ambient)


# -- orbits -----------------------------------------------------------------

PERIODIC = "periodic"
LEFT_DOMAIN = "left-domain"
BUDGET_EXHAUSTED = "budget-exhausted"


@dataclass(frozen=True)
class OrbitRecord:
    start: Fraction
    points: tuple[Fraction, ...]
    status: str
    period: int | None = None
    multiplier: Fraction | None = None
    left_step: int | None = None


def iterate(T: _PiecewiseAffine, x: Fraction, budget: int) -> OrbitRecord:
    """Forward orbit by exact evaluation, stopping on exact revisit.

    Attracting cycles are approached but never exactly revisited from a
    generic start, so a converging orbit legitimately ends BudgetExhausted;
    detect_periodic is the tool that finds the cycle itself.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    points = [x]
    seen = {x: 0}
    for step in range(1, budget + 1):
        y = T.evaluate(points[-1])
        if y is None:
            return OrbitRecord(x, tuple(points), LEFT_DOMAIN, left_step=step)
        if y in seen:
            entry = seen[y]
            period = len(points) - entry
            mult = ONE
            for p in points[entry:]:
                piece = T.piece_at(p)
                assert piece is not None
                mult *= piece.slope
            points.append(y)
            return OrbitRecord(
                x, tuple(points), PERIODIC, period=period, multiplier=mult
            )
        seen[y] = len(points)
        points.append(y)
    return OrbitRecord(x, tuple(points), BUDGET_EXHAUSTED)


NEUTRAL = "neutral"
ATTRACTING = "attracting"
REPELLING = "repelling"


@dataclass(frozen=True)
class Cycle:
    points: tuple[Fraction, ...]
    period: int
    multiplier: Fraction
    classification: str

    @staticmethod
    def classify_multiplier(rho: Fraction) -> str:
        if rho == 1:
            return NEUTRAL
        return ATTRACTING if rho < 1 else REPELLING


def _verify_cycle(T: _PiecewiseAffine, x0: Fraction, period: int) -> Cycle | None:
    """Exact re-evaluation: walk x0 for `period` steps and demand closure."""
    pts = [x0]
    mult = ONE
    for _ in range(period):
        piece = T.piece_at(pts[-1])
        if piece is None or pts[-1] in getattr(T, "undefined_points", ()):
            return None
        mult *= piece.slope
        pts.append(piece(pts[-1]))
    if pts[-1] != x0:
        return None
    if len(set(pts[:-1])) != period:
        return None  # shorter true period; caller retries with divisors
    return Cycle(tuple(pts[:-1]), period, mult, Cycle.classify_multiplier(mult))


def _tail_period(indices: Sequence[int], max_period: int) -> int | None:
    """Smallest p such that the tail of the index sequence is p-periodic.

    Demands at least two full periods of evidence plus a little slack so a
    transient cannot masquerade as a cycle.
    """
    n = len(indices)
    for p in range(1, max_period + 1):
        need = 2 * p + 2
        if need > n:
            return None
        tail = indices[n - need :]
        if all(tail[i] == tail[i + p] for i in range(len(tail) - p)):
            return p
    return None


def detect_periodic(
    T: _PiecewiseAffine,
    budget: int = 2000,
    starts: Sequence[Fraction] | None = None,
) -> list[Cycle]:
    """Find periodic families by exact revisit or by path composition.

    Each reported cycle is verified by exact re-evaluation.  Orbits whose
    branch-index tail settles into a periodic pattern yield a candidate
    affine composition; its fixed point is solved exactly and kept only if
    walking it around really closes up inside the right branches.
    """
    if starts is None:
        starts = [p.domain.midpoint for p in T.pieces]
        starts.append(T.ambient.lo)
    found: list[Cycle] = []
    seen_signatures: set[tuple] = set()

    def remember(c: Cycle) -> None:
        # One family per branch-path cycle: canonicalize by the smallest
        # rotation of the piece-index sequence along the cycle.
        idx = []
        for pt in c.points:
            piece = T.piece_at(pt)
            assert piece is not None
            idx.append(T.pieces.index(piece))
        rotations = [tuple(idx[i:] + idx[:i]) for i in range(len(idx))]
        sig = (min(rotations), c.multiplier)
        if sig not in seen_signatures:
            seen_signatures.add(sig)
            found.append(c)

    for x0 in starts:
        try:
            rec = iterate(T, x0, budget)
        except OutOfDomain:
            continue
        if rec.status == PERIODIC:
            entry = len(rec.points) - 1 - rec.period
            cyc = _verify_cycle(T, rec.points[entry], rec.period)
            if cyc is not None:
                remember(cyc)
            continue
        if rec.status != BUDGET_EXHAUSTED:
            continue
        indices = []
        ok = True
        for pt in rec.points[:-1]:
            piece = T.piece_at(pt)
            if piece is None:
                ok = False
                break
            indices.append(T.pieces.index(piece))
        if not ok:
            continue
        p = _tail_period(indices, max_period=max(1, len(indices) // 3))
        if p is None:
            continue
        # Compose the affine maps along one period of the observed tail.
        comp_slope, comp_offset = ONE, ZERO
        for i in range(len(indices) - p, len(indices)):
            piece = T.pieces[indices[i]]
            comp_slope, comp_offset = (
                piece.slope * comp_slope,
                piece.slope * comp_offset + piece.offset,
            )
        if comp_slope == 1:
            continue  # neutral paths are caught by exact revisit instead
        x_fix = comp_offset / (1 - comp_slope)
        for q in _divisors(p):
            cyc = _verify_cycle(T, x_fix, q)
            if cyc is not None:
                remember(cyc)
                break
    return found


def _divisors(n: int) -> list[int]:
    out = [d for d in range(1, n + 1) if n % d == 0]
    return out


# -- first return -----------------------------------------------------------


def first_return(
    T: _PiecewiseAffine,
    parts: Sequence[Interval],
    budget: int = 10_000,
) -> PartialAiet:
    """First-return map of T on a finite union of intervals.

    Pushes maximal continuity subintervals forward, splitting at the
    breakpoints and hole boundaries of T, and records each landing with the
    exact slope/offset composed along its path.  Sub-parameters that leave
    the domain of a partial T are undefined; parameters still in flight
    when the push budget runs out land in undefined territory too and are
    additionally flagged unresolved.
    """
    sections = disjoint_sorted(parts)
    if not sections:
        raise ValueError("need at least one return section")
    for s in sections:
        if not T.ambient.contains_interval(s):
            raise ValueError(f"section {s} outside ambient {T.ambient}")
    hull = Interval(sections[0].lo, sections[-1].hi)

    # Work items: the source subinterval (in return coordinates), and the
    # affine map phi with phi(source) = current location of that bundle.
    out_pieces: list[AffinePiece] = []
    dead: list[Interval] = []  # source parts that left the domain
    unresolved: list[Interval] = []

    work: deque[tuple[Interval, AffinePiece, int]] = deque()
    for s in sections:
        work.append((s, AffinePiece(s, ONE, ZERO), 0))

    cuts_cache = sorted(
        {p.domain.lo for p in T.pieces}
        | {p.domain.hi for p in T.pieces}
        | {iv.lo for iv in getattr(T, "undefined_intervals", ())}
        | {iv.hi for iv in getattr(T, "undefined_intervals", ())}
    )

    while work:
        src, phi, depth = work.popleft()
        if depth >= budget:
            unresolved.append(src)
            continue
        cur = phi.image
        # Split the bundle at T's subdivision points.
        cut_points = [c for c in cuts_cache if cur.lo < c < cur.hi]
        lo = cur.lo
        chunks: list[Interval] = []
        for c in cut_points + [cur.hi]:
            chunks.append(Interval(lo, c))
            lo = c
        for chunk in chunks:
            src_chunk = Interval(phi.preimage(chunk.lo), phi.preimage(chunk.hi))
            tp = T.piece_at(chunk.lo)
            if tp is None or not tp.domain.contains_interval(chunk):
                dead.append(src_chunk)
                continue
            moved = AffinePiece(src_chunk, tp.slope * phi.slope, tp.slope * phi.offset + tp.offset)
            img = moved.image
            # Landed portions are done; the rest keeps flying.
            landed: list[Interval] = []
            for s in sections:
                hit = img.intersect(s)
                if hit is not None:
                    landed.append(hit)
            for hit in landed:
                sub = Interval(moved.preimage(hit.lo), moved.preimage(hit.hi))
                out_pieces.append(moved.restrict(sub))
            for rest in subtract(img, landed):
                sub = Interval(moved.preimage(rest.lo), moved.preimage(rest.hi))
                work.append((sub, moved.restrict(sub), depth + 1))

    undefined = sorted(dead + unresolved, key=lambda iv: iv.lo)
    gap_fillers = subtract(hull, [s for s in sections])
    return PartialAiet(
        out_pieces,
        hull,
        undefined_intervals=_coalesce(undefined + gap_fillers),
        unresolved=tuple(_coalesce(unresolved)),
    )


def _coalesce(intervals: Iterable[Interval]) -> list[Interval]:
    """Merge touching/overlapping intervals into maximal ones."""
    ordered = sorted(intervals, key=lambda iv: iv.lo)
    out: list[Interval] = []
    for iv in ordered:
        if out and iv.lo <= out[-1].hi:
            if iv.hi > out[-1].hi:
                out[-1] = Interval(out[-1].lo, iv.hi)
        else:
            out.append(iv)
    return out


# -- Keane-style evidence ---------------------------------------------------


@dataclass(frozen=True)
class KeaneReport:
    idoc_holds_up_to_depth: bool
    depth: int
    collisions: tuple[tuple[Fraction, int, Fraction], ...]  # (d, k, hit)


def keane_evidence(E: Aiet, depth: int) -> KeaneReport:
    """Finite-depth infinite-distinct-orbit-condition evidence for an IET.

    Checks that forward orbits of the interior discontinuities avoid the
    discontinuity set for `depth` steps.  Evidence only: a clean report at
    finite depth proves nothing about minimality and is never treated as if
    it did.
    """
    if not E.is_iet():
        raise ValueError("Keane evidence is defined for unit-slope exchanges")
    disc = set(E.breakpoints)
    collisions: list[tuple[Fraction, int, Fraction]] = []
    for d in sorted(disc):
        x = d
        for k in range(1, depth + 1):
            x = E(x)
            if x in disc:
                collisions.append((d, k, x))
                break
    return KeaneReport(not collisions, depth, tuple(collisions))
