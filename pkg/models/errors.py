"""Exceptions raised by the quasr packages.

All of them derive from ``ValueError`` so callers validating user input can
catch the whole family at once.
"""


class QuasrError(ValueError):
    """Base class for every error raised on purpose by this package."""


class DomainError(QuasrError):
    """A point or a data matrix lies outside the support of the family."""


class DimensionMismatchError(QuasrError):
    """Parameters and statistics disagree on d or on block sizes."""


class EmptyDatasetError(QuasrError):
    """A dataset with no rows was passed where samples are required."""


class FactorizationError(QuasrError):
    """A cached factorization could not be built (non-finite input, singular block)."""


class CriterionUnavailableError(QuasrError):
    """The requested model-selection criterion cannot be computed for this path."""


class InputFormatError(QuasrError):
    """An input file is malformed."""
