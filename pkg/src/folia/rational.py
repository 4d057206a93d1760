"""Helpers for exact rationals and their "p/q" wire format.

All JSON produced by the exact core writes rationals as strings "p/q" (or
"p" when the denominator is 1) so that no value ever passes through a float.
"""

from __future__ import annotations

from fractions import Fraction

Rat = Fraction


def rat(value: int | str | Fraction, den: int | None = None) -> Fraction:
    """Build an exact rational from an int, a Fraction, or a "p/q" string."""
    if den is not None:
        return Fraction(value, den)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rat(value)
    raise TypeError(f"not an exact rational source: {value!r}")


def parse_rat(text: str) -> Fraction:
    """Parse "p/q" or "p" into a Fraction.  Floats are rejected on purpose."""
    s = text.strip()
    if "/" in s:
        num, _, den = s.partition("/")
        return Fraction(int(num), int(den))
    return Fraction(int(s))


def format_rat(x: Fraction) -> str:
    """Render a Fraction in the wire format "p/q" (or "p" for integers)."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def rat_to_decimal(x: Fraction, places: int = 12) -> str:
    """Fixed-precision decimal rendering, round-half-even free.

    Truncates toward zero after `places` digits; used only for SVG
    coordinates where determinism matters and exactness does not.
    """
    sign = "-" if x < 0 else ""
    x = abs(x)
    scaled = x.numerator * 10**places // x.denominator
    whole, frac = divmod(scaled, 10**places)
    return f"{sign}{whole}.{str(frac).zfill(places)}"
