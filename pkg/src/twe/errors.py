"""Exception types raised across the package.

All of them derive from :class:`TWEError` so callers (the CLI in particular)
can separate operational failures from programming errors.
"""


class TWEError(Exception):
    """Base class for expected, reportable failures."""


class EmptyInput(TWEError, ValueError):
    pass


class DimensionMismatch(TWEError, ValueError):
    pass


# short alias used by the alignment and scoring code
DimMismatch = DimensionMismatch


class DuplicateToken(TWEError, ValueError):
    pass


class NonFiniteValue(TWEError, ValueError):
    pass


class NoOverlap(TWEError, ValueError):
    pass


class DegenerateSource(TWEError, ValueError):
    pass


class OOVQuery(TWEError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidPersistence(TWEError, ValueError):
    pass


class EmptyList(TWEError, ValueError):
    pass


class EmptyCorpus(TWEError, ValueError):
    pass


class NoRepresentableTokens(TWEError, ValueError):
    pass


class EmptySentence(TWEError, ValueError):
    pass


class EmptyVocabulary(TWEError, ValueError):
    pass


class NonFiniteLoss(TWEError, FloatingPointError):
    pass


class ZeroVector(TWEError, ValueError):
    pass


class RaggedRatings(TWEError, ValueError):
    pass


class ZeroVariance(TWEError, ValueError):
    pass


class LengthMismatch(TWEError, ValueError):
    pass


class AllTied(TWEError, ValueError):
    pass


class SingleClass(TWEError, ValueError):
    pass


class UnresolvedId(TWEError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class FormatError(TWEError, ValueError):
    """Malformed input file other than an embedding file."""
