"""Exact-arithmetic engine for directional foliations on polygonal dilation
surfaces and the affine interval exchange transformations they induce.

The exact core (everything except the conjugacy construction and the
box-counting estimator) computes with arbitrary-precision rationals and
makes no rounding anywhere; equality means rational equality.
"""

from fractions import Fraction

__version__ = "0.1.0"

# The scalar type of every geometric quantity in the exact core.  An alias,
# not a wrapper: Fraction already guarantees reduced form and positive
# denominator.
ExactRational = Fraction

__all__ = ["ExactRational", "__version__"]
