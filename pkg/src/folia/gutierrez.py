"""Conjugating a sampled circle map to an interval exchange.

The rest of the package certifies dynamics exactly from a formula; this
module goes the other way and rebuilds a model map from one long orbit.
Each orbit point p_i carries the atomic mass beta*(1-beta)^(i-1).  Reading
arc length through that measure gives a coordinate h in which the sampled
map looks like a piecewise translation: h(x) is the mass strictly between a
basepoint and x, and as beta shrinks the displacement h(T(x)) - h(x)
flattens out on every continuity arc.  With finitely many points the limit
is approached along a decreasing list of betas, with Cauchy and
displacement diagnostics instead of a convergence proof, and the candidate
exchange is rebuilt from the measured cut positions.

Masses are normalised by the sampled total 1 - (1-beta)^n, which keeps the
tables stable as beta shrinks at fixed n.  All arithmetic stays in Fraction
when the inputs are rational; this is the one module where float input is
tolerated too, because orbits fed to it may come from measured data.
"""

from __future__ import annotations

import random
import statistics
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DisplacementCheckFailed, NotBijective, OrbitTooShort, OutOfDomain
from .iet import AffinePiece, Aiet, check_bijective
from .interval import Interval

DEFAULT_BETAS = tuple(Fraction(1, 2**k) for k in range(4, 13))


def _ambient_of(T) -> Interval:
    for name in ("ambient", "L"):
        iv = getattr(T, name, None)
        if isinstance(iv, Interval):
            return iv
    raise ValueError("cannot infer an ambient interval; pass one explicitly")


def _pieces_of(T):
    if hasattr(T, "branch_a"):
        return (T.branch_a, T.branch_b)
    return tuple(T.pieces)


def _step(T, x):
    """One application of T, or None where it is undefined."""
    ev = getattr(T, "evaluate", None)
    if ev is None:
        return T(x)
    try:
        return ev(x)
    except OutOfDomain:
        return None


# -- sampled orbits ----------------------------------------------------------


@dataclass(frozen=True)
class OrbitSample:
    """A finite forward orbit treated as a measuring stick.

    points[i+1] is understood to be transform(points[i]); sample_orbit is
    the checked way to build one.  max_gap is the widest arc free of sample
    points, measured cyclically, and gates every density requirement
    downstream.
    """

    transform: object
    ambient: Interval
    points: tuple
    singular: tuple = ()
    max_gap: Fraction = field(init=False)

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("need at least one orbit point")
        if any(p not in self.ambient for p in self.points):
            raise ValueError("orbit points must lie in the ambient interval")
        if len(set(self.points)) != len(self.points):
            raise ValueError("orbit points must be distinct")
        spts = sorted(self.points)
        gaps = [b - a for a, b in zip(spts, spts[1:])]
        gaps.append(spts[0] + self.ambient.length - spts[-1])
        object.__setattr__(self, "max_gap", max(gaps))

    def __len__(self) -> int:
        return len(self.points)


def sample_orbit(T, start, count: int, ambient: Interval | None = None,
                 singular=None) -> OrbitSample:
    """Walk count points of the forward orbit of start under T.

    Raises OrbitTooShort if the orbit closes up, hits an undefined point,
    or leaves the ambient interval before count points are collected: a
    finite or escaping orbit cannot serve as a measuring stick.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if ambient is None:
        ambient = _ambient_of(T)
    if start not in ambient:
        raise OutOfDomain(f"{start} outside {ambient}")
    pts = [start]
    seen = {start}
    x = start
    while len(pts) < count:
        y = _step(T, x)
        if y is None:
            raise OrbitTooShort(
                f"orbit hits an undefined point after {len(pts)} of {count} points"
            )
        if y not in ambient:
            raise OrbitTooShort(
                f"orbit leaves {ambient} after {len(pts)} of {count} points"
            )
        if y in seen:
            raise OrbitTooShort(
                f"orbit closes up after {len(pts)} of {count} points"
            )
        pts.append(y)
        seen.add(y)
        x = y
    if singular is None:
        singular = circle_singularities(T, ambient) if _has_pieces(T) else ()
    return OrbitSample(transform=T, ambient=ambient, points=tuple(pts),
                       singular=tuple(singular))


def _has_pieces(T) -> bool:
    return hasattr(T, "pieces") or hasattr(T, "branch_a")


def circle_singularities(T, ambient: Interval | None = None) -> tuple:
    """Points where T genuinely jumps as a circle map.

    A slope break with matching one-sided values is not listed: the
    rectifying coordinate erases it, so it cannot survive as a cut of the
    extracted exchange.  Undefined parameters and uncovered stretches do
    count, including the seam where the two ends of the ambient interval
    are glued.
    """
    if ambient is None:
        ambient = _ambient_of(T)
    circ = ambient.length
    ps = sorted(_pieces_of(T), key=lambda p: p.domain.lo)
    out = set(getattr(T, "undefined_points", ()))
    for left, right in zip(ps, ps[1:]):
        b = right.domain.lo
        if left.domain.hi != b:
            out.add(left.domain.hi)
            out.add(b)
            continue
        left_limit = left.slope * b + left.offset
        if (right.slope * b + right.offset - left_limit) % circ != 0:
            out.add(b)
    if ps[0].domain.lo != ambient.lo or ps[-1].domain.hi != ambient.hi:
        out.add(ambient.lo)
    else:
        left_limit = ps[-1].slope * ambient.hi + ps[-1].offset
        seam_value = ps[0].slope * ambient.lo + ps[0].offset
        if (seam_value - left_limit) % circ != 0:
            out.add(ambient.lo)
    return tuple(sorted(out))


# -- atomic measures ---------------------------------------------------------


@dataclass(frozen=True)
class AtomicMeasure:
    """Geometric weights on the first `size` points of an orbit.

    weights[i] = beta*(1-beta)**i is the mass of the (i+1)-th orbit point;
    together with tail_mass, the mass the unsampled tail would carry, the
    weights sum to exactly 1.
    """

    beta: Fraction
    size: int
    weights: tuple = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.size < 1:
            raise ValueError("size must be positive")
        w = []
        cur = self.beta
        for _ in range(self.size):
            w.append(cur)
            cur *= 1 - self.beta
        object.__setattr__(self, "weights", tuple(w))

    @property
    def tail_mass(self):
        return (1 - self.beta) ** self.size

    @property
    def sampled_mass(self):
        return 1 - self.tail_mass


def measure_of_interval(measure: AtomicMeasure, sample: OrbitSample, arc) -> Fraction:
    """Raw mass of the sample points strictly inside a cyclic arc.

    The arc is an endpoint pair (a, b) read counterclockwise from a to b;
    endpoints themselves never count.  Endpoints congruent mod the
    circumference describe the full circle minus the point a.
    """
    a, b = arc
    if measure.size != len(sample.points):
        raise ValueError("measure size does not match the sample")
    circ = sample.ambient.length
    width = (b - a) % circ
    if width == 0:
        if a == b:
            raise ValueError("empty arc")
        width = circ
    total = 0
    for p, w in zip(sample.points, measure.weights):
        if 0 < (p - a) % circ < width:
            total += w
    return total


# -- measure coordinates -----------------------------------------------------


@dataclass(frozen=True)
class ConjugacyApprox:
    """Rectifying coordinates built from one sampled orbit.

    tables[k][i] is the normalised mass strictly between the basepoint and
    points[i] under betas[k]; cauchy[k][i] compares consecutive tables at
    the same point.  Values live in [0, 1) whatever the circumference of
    the ambient interval is, so the extracted exchange always acts on the
    unit interval.
    """

    sample: OrbitSample
    basepoint: Fraction
    betas: tuple
    tables: tuple
    cauchy: tuple
    _rank_pos: tuple = field(repr=False)
    _cums: tuple = field(repr=False)

    @property
    def h(self) -> tuple:
        """The finest table, at the smallest beta."""
        return self.tables[-1]

    @property
    def cauchy_max(self) -> tuple:
        return tuple(max(row) for row in self.cauchy)

    def rank(self, x) -> int:
        """How many sample points sit strictly between the basepoint and x."""
        q = (x - self.basepoint) % self.sample.ambient.length
        return bisect_left(self._rank_pos, q)

    def value_at(self, x, index: int = -1):
        """h at any circle point, by the same strict-arc rule as the tables.

        Returns the cumulative normalised mass in [0, 1]; the value 1 occurs
        only past the last sample point before the basepoint closes the
        circle, where the coordinate wraps.
        """
        return self._cums[index][self.rank(x)]

    def h_at(self, x):
        return self.value_at(x, -1)


def _widest_gap_midpoint(sample: OrbitSample):
    """Midpoint of the first widest arc free of sample points."""
    circ = sample.ambient.length
    spts = sorted(sample.points)
    best = None
    best_at = None
    for a, b in zip(spts, spts[1:]):
        if best is None or b - a > best:
            best, best_at = b - a, a
    wrap = spts[0] + circ - spts[-1]
    if best is None or wrap > best:
        best, best_at = wrap, spts[-1]
    lo = sample.ambient.lo
    return lo + (best_at - lo + best / 2) % circ


def build_h(sample: OrbitSample, betas=None, basepoint=None,
            density_threshold=None) -> ConjugacyApprox:
    """Measure coordinates of every sample point, one table per beta.

    betas must decrease strictly within (0, 1/2]; the default ladder runs
    from 2^-4 down to 2^-12.  The basepoint defaults to the midpoint of the
    widest sample-free arc and must avoid the sample.  Raises OrbitTooShort
    when the widest sample-free arc exceeds density_threshold (one percent
    of the circumference unless overridden): tables built from a sparse
    sample would be dominated by where the points happen to sit.
    """
    betas = DEFAULT_BETAS if betas is None else tuple(betas)
    if not betas:
        raise ValueError("need at least one beta")
    if any(not 0 < b <= Fraction(1, 2) for b in betas):
        raise ValueError("betas must lie in (0, 1/2]")
    if any(a <= b for a, b in zip(betas, betas[1:])):
        raise ValueError("betas must decrease strictly")
    circ = sample.ambient.length
    threshold = circ / 100 if density_threshold is None else density_threshold
    if sample.max_gap > threshold:
        raise OrbitTooShort(
            f"widest sample-free arc {sample.max_gap} exceeds the density "
            f"threshold {threshold}"
        )
    if basepoint is None:
        basepoint = _widest_gap_midpoint(sample)
    elif basepoint in set(sample.points):
        raise ValueError("basepoint must avoid the sample")
    n = len(sample.points)
    pos = [(p - basepoint) % circ for p in sample.points]
    rank_order = sorted(range(n), key=lambda i: pos[i])
    tables = []
    cums = []
    for beta in betas:
        m = AtomicMeasure(beta, n)
        scale = m.sampled_mass
        h = [None] * n
        acc = 0
        cum = [0 / scale]
        for i in rank_order:
            h[i] = cum[-1]
            acc += m.weights[i]
            cum.append(acc / scale)
        tables.append(tuple(h))
        cums.append(tuple(cum))
    cauchy = tuple(
        tuple(abs(a - b) for a, b in zip(ha, hb))
        for ha, hb in zip(tables, tables[1:])
    )
    return ConjugacyApprox(
        sample=sample,
        basepoint=basepoint,
        betas=betas,
        tables=tuple(tables),
        cauchy=cauchy,
        _rank_pos=tuple(pos[i] for i in rank_order),
        _cums=tuple(cums),
    )


# -- displacement diagnostics ------------------------------------------------


def _mass_distance(u, v):
    """Distance between two coordinates on the unit mass circle."""
    d = abs(u - v)
    return d if 2 * d <= 1 else 1 - d


@dataclass(frozen=True)
class DisplacementReport:
    tolerance: Fraction
    pair_count: int
    per_beta_max: tuple

    @property
    def final_max(self):
        return self.per_beta_max[-1]

    @property
    def passed(self) -> bool:
        return self.final_max <= self.tolerance

    @property
    def improving(self) -> bool:
        """Violations should shrink, at worst stall, as beta does."""
        return all(a >= b for a, b in zip(self.per_beta_max, self.per_beta_max[1:]))


def _default_pairs(approx: ConjugacyApprox, T):
    """Adjacent sample points with no jump of T strictly between them."""
    sample = approx.sample
    circ = sample.ambient.length
    sing_pos = sorted(
        (z - approx.basepoint) % circ
        for z in circle_singularities(T, sample.ambient)
    )
    order = sorted(range(len(sample.points)),
                   key=lambda i: (sample.points[i] - approx.basepoint) % circ)
    pairs = []
    for i, j in zip(order, order[1:]):
        a = (sample.points[i] - approx.basepoint) % circ
        b = (sample.points[j] - approx.basepoint) % circ
        k = bisect_right(sing_pos, a)
        # a jump at the far endpoint splits the pair too: the far point
        # already evaluates under the other branch
        if k < len(sing_pos) and sing_pos[k] <= b:
            continue
        pairs.append((sample.points[i], sample.points[j]))
    return pairs


def sampled_pairs(approx: ConjugacyApprox, T=None, seed: int = 0,
                  draws: int = 100):
    """The default adjacent pairs plus `draws` random same-arc draws.

    Random draws straddling a jump of T are discarded rather than
    replaced, so the extra-pair count is at most `draws`; widely
    separated pairs stress the displacement bound harder than adjacent
    ones, which is the point of drawing them.
    """
    T = approx.sample.transform if T is None else T
    sample = approx.sample
    circ = sample.ambient.length
    sing_pos = sorted(
        (z - approx.basepoint) % circ
        for z in circle_singularities(T, sample.ambient)
    )
    pts = sample.points
    rng = random.Random(seed)
    pairs = list(_default_pairs(approx, T))
    for _ in range(draws):
        i, j = rng.sample(range(len(pts)), 2)
        a = (pts[i] - approx.basepoint) % circ
        b = (pts[j] - approx.basepoint) % circ
        if a > b:
            i, j, a, b = j, i, b, a
        k = bisect_right(sing_pos, a)
        if k < len(sing_pos) and sing_pos[k] <= b:
            continue
        pairs.append((pts[i], pts[j]))
    return pairs


def verify_displacement(approx: ConjugacyApprox, T=None, pairs=None,
                        tolerance=Fraction(1, 1000)) -> DisplacementReport:
    """Worst |d(h a, h c) - d(h Ta, h Tc)| per beta, in the mass metric.

    A translation preserves distances, so on any arc where T is continuous
    the two distances should agree up to the resolution of the measure.
    Pairs straddling a jump of T are meaningless here; the default pair
    list takes adjacent sample points on a common continuity arc.
    """
    T = approx.sample.transform if T is None else T
    pair_list = list(_default_pairs(approx, T) if pairs is None else pairs)
    if not pair_list:
        raise ValueError("no pairs to check")
    quads = []
    for a, c in pair_list:
        ta, tc = _step(T, a), _step(T, c)
        if ta is None or tc is None:
            raise ValueError(f"pair ({a}, {c}) leaves the domain of the map")
        quads.append((approx.rank(a), approx.rank(c),
                      approx.rank(ta), approx.rank(tc)))
    per_beta = []
    for cum in approx._cums:
        worst = cum[0]
        for ra, rc, rta, rtc in quads:
            v = abs(_mass_distance(cum[ra], cum[rc])
                    - _mass_distance(cum[rta], cum[rtc]))
            if v > worst:
                worst = v
        per_beta.append(worst)
    return DisplacementReport(tolerance=tolerance, pair_count=len(pair_list),
                              per_beta_max=tuple(per_beta))


# -- extraction --------------------------------------------------------------


def snap_rational(x, tolerance) -> Fraction:
    """First continued-fraction convergent of x within tolerance.

    Among all rationals within tolerance this has the smallest denominator,
    which is what makes snapping measured cut positions meaningful.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    target = Fraction(x)
    neg = target < 0
    t = -target if neg else target
    num, den = t.numerator, t.denominator
    p0, q0, p1, q1 = 0, 1, 1, 0
    while True:
        a = num // den
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        cand = Fraction(p1, q1)
        if abs(cand - t) <= tolerance:
            return -cand if neg else cand
        num, den = den, num - a * den


def _preimage_of(T, y):
    for p in _pieces_of(T):
        if y in p.image:
            return p.preimage(y)
    return None


@dataclass(frozen=True)
class ExtractionReport:
    """The rebuilt exchange plus everything needed to doubt it.

    medians are the per-piece median orbit displacements; translations are
    rebuilt exactly from the cuts, so median_error is the honest residual
    of the fit.  cuts equals cuts_raw unless snapping was requested.
    """

    iet: Aiet
    cuts_raw: tuple
    cuts: tuple
    medians: tuple
    translations: tuple
    median_error: Fraction
    snapped: bool
    pullback_found: bool
    displacement: DisplacementReport


def extract_iet(approx: ConjugacyApprox, T=None, tolerance=Fraction(1, 1000),
                snap: bool = False, pairs=None,
                gate: DisplacementReport | None = None) -> ExtractionReport:
    """Rebuild the exchange seen through the measure coordinate.

    Cut positions are h at the jumps of T plus h at the preimage of the
    basepoint, where the image wraps around the seam.  Orbit displacements
    vote per piece through their median, but the medians fix only the order
    of the images; the translations are then rebuilt exactly from the cuts,
    so the result is a genuine exchange whenever the order was inferred
    correctly, and check_bijective certifies the tiling.

    A displacement report already in hand can be passed as gate to avoid
    paying for the check twice; either way the extraction refuses to run,
    raising DisplacementCheckFailed, when the sampled displacements spread
    more than the tolerance allows at the smallest beta.
    """
    T = approx.sample.transform if T is None else T
    if gate is None:
        gate = verify_displacement(approx, T, pairs, tolerance)
    if gate.final_max > tolerance:
        raise DisplacementCheckFailed(
            f"worst displacement violation {gate.final_max} exceeds {tolerance}"
        )
    sample = approx.sample
    zero = approx._cums[-1][0]
    one = approx._cums[-1][-1]
    cut_values = {approx.h_at(z) for z in circle_singularities(T, sample.ambient)}
    pull = _preimage_of(T, approx.basepoint)
    if pull is not None:
        cut_values.add(approx.h_at(pull))
    cuts_raw = tuple(sorted(c for c in cut_values if 0 < c < 1))
    if snap:
        cuts = tuple(snap_rational(c, tolerance) for c in cuts_raw)
        bad_order = any(a >= b for a, b in zip(cuts, cuts[1:]))
        if bad_order or any(not 0 < c < 1 for c in cuts):
            raise ValueError("snapping merged adjacent cuts; lower the tolerance")
    else:
        cuts = cuts_raw

    # displacements in h coordinates, attributed by the raw cuts
    raw_bounds = (zero, *cuts_raw, one)
    h = approx.tables[-1]
    per_piece = [[] for _ in range(len(cuts_raw) + 1)]
    n = len(sample.points)
    for i, hx in enumerate(h):
        if i + 1 < n:
            hy = h[i + 1]
        else:
            y = _step(T, sample.points[i])
            if y is None:
                continue
            hy = approx.h_at(y)
        per_piece[bisect_right(raw_bounds, hx) - 1].append(hy - hx)
    for k, ds in enumerate(per_piece):
        if not ds:
            raise ValueError(
                f"no orbit displacement lands in piece {k}; the sample is "
                "too sparse for this many cuts"
            )
    medians = tuple(statistics.median(ds) for ds in per_piece)

    # The image starts are a permutation of exact prefix sums and one of
    # them is 0, so noise near the seam wraps an estimate to just below 1.
    # Anchoring at the estimate closest to 0 on the circle restores the
    # linear order.
    ests = [(lo + m) % 1 for lo, m in zip(raw_bounds[:-1], medians)]
    anchor = min(range(len(ests)), key=lambda k: min(ests[k], 1 - ests[k]))
    order = sorted(range(len(ests)), key=lambda k: (ests[k] - ests[anchor]) % 1)

    # binary floats embed exactly, so the rebuilt exchange is exact even
    # when the tables were computed in float
    bounds = tuple(Fraction(b) for b in (zero, *cuts, one))
    lengths = [b - a for a, b in zip(bounds, bounds[1:])]
    translations = [bounds[0]] * len(lengths)
    at = bounds[0]
    for k in order:
        translations[k] = at - bounds[k]
        at = at + lengths[k]
    pieces = [
        AffinePiece(Interval(a, b), Fraction(1), t)
        for a, b, t in zip(bounds, bounds[1:], translations)
    ]
    out = Aiet(pieces, Interval(bounds[0], bounds[-1]))
    cert = check_bijective(out)
    if not cert.bijective:
        raise NotBijective("rebuilt exchange does not tile; cuts must have collided")
    return ExtractionReport(
        iet=out,
        cuts_raw=cuts_raw,
        cuts=cuts,
        medians=medians,
        translations=tuple(translations),
        median_error=max(abs(m - t) for m, t in zip(medians, translations)),
        snapped=snap,
        pullback_found=pull is not None,
        displacement=gate,
    )
