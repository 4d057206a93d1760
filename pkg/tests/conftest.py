"""Shared generators for randomized exact-rational test instances."""

from __future__ import annotations

import random
from fractions import Fraction

from folia.iet import AffinePiece, Aiet
from folia.interval import Interval
from folia.rauzy import TwoBranchMap, aligned_state


def random_fraction(rng: random.Random, lo: int, hi: int, max_den: int = 32) -> Fraction:
    den = rng.randint(1, max_den)
    num = rng.randint(lo * den, hi * den)
    return Fraction(num, den)


def random_aligned_state(rng: random.Random) -> TwoBranchMap:
    """Aligned two-branch map with a nonempty hole, exact rational data.

    Slopes are rescaled when necessary so the two images always leave room
    for a hole; every output satisfies the aligned-state invariants.
    """
    u = random_fraction(rng, -8, 8)
    length = random_fraction(rng, 1, 12) + Fraction(1, rng.randint(2, 40))
    v = u + length
    # cut strictly interior
    t = Fraction(rng.randint(1, 127), 128)
    p = u + t * length
    a = Fraction(rng.randint(1, 48), rng.randint(1, 48)) + Fraction(1, 97)
    b = Fraction(rng.randint(1, 48), rng.randint(1, 48)) + Fraction(1, 89)
    used = a * (p - u) + b * (v - p)
    if used >= length:
        # leave a hole of a random relative size
        shrink = Fraction(rng.randint(1, 9), 10) * length / used
        a *= shrink
        b *= shrink
    return aligned_state(Interval(u, v), p, a, b)


def _distinct_cuts(rng: random.Random, n: int, max_den: int = 64) -> list[Fraction]:
    """n - 1 distinct interior breakpoints of [0, 1], plus the endpoints."""
    cuts: set[Fraction] = set()
    while len(cuts) < n - 1:
        c = Fraction(rng.randint(1, max_den - 1), max_den)
        cuts.add(c)
    return [Fraction(0)] + sorted(cuts) + [Fraction(1)]


def random_bijective_aiet(rng: random.Random, max_pieces: int = 6) -> Aiet:
    """Bijective affine exchange of [0, 1): random domain cuts, random image
    cuts, and a random permutation matching pieces to image slots; slopes
    come out as the length ratios, so bijectivity holds by construction."""
    n = rng.randint(1, max_pieces)
    dom = _distinct_cuts(rng, n)
    img = _distinct_cuts(rng, n)
    perm = list(range(n))
    rng.shuffle(perm)
    pieces = []
    for i in range(n):
        d_lo, d_hi = dom[i], dom[i + 1]
        s_lo, s_hi = img[perm[i]], img[perm[i] + 1]
        slope = (s_hi - s_lo) / (d_hi - d_lo)
        pieces.append(AffinePiece(Interval(d_lo, d_hi), slope, s_lo - slope * d_lo))
    return Aiet(pieces, Interval(Fraction(0), Fraction(1)))
