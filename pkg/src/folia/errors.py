"""Error types shared across the package.

Domain failures raise FoliaError subclasses so the CLI can map them to exit
code 1 uniformly.  Conditions that the contracts treat as values (an
undefined point, a saddle-connection verdict) are not exceptions.
"""


class FoliaError(Exception):
    """Base class for all domain errors."""


class NotBijective(FoliaError):
    pass


class NotClosed(FoliaError):
    pass


class StartsAtSingularity(FoliaError):
    pass


class TransversalContainsSingularity(FoliaError):
    pass


class DirectionOutsideSector(FoliaError):
    pass


class DegenerateBranch(FoliaError):
    pass


class NonStandardState(FoliaError):
    """A two-branch state matching neither the standard cases nor Case 1.

    Raised instead of forcing a letter, so a misclassified predicate can
    never silently corrupt an induction word.
    """


class HoleMismatch(FoliaError):
    pass


class OutOfDomain(FoliaError):
    pass


class OrbitTooShort(FoliaError):
    pass


class DisplacementCheckFailed(FoliaError):
    pass


class NotFound(FoliaError):
    pass


class InvalidSurface(FoliaError):
    pass


class SchemaViolation(FoliaError):
    """A JSON document does not match its wire format."""


class IoError(FoliaError):
    """Reading or writing an artifact file failed."""
