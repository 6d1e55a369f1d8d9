"""Exception taxonomy shared across the package.

Lookup failures, build failures, and file-format failures are kept as
distinct classes so callers (and the CLI exit-code mapping) can tell
them apart without parsing messages.
"""

from __future__ import annotations


class LinguographError(Exception):
    """Base class for all errors raised by this package."""


# -- lookup / query errors ---------------------------------------------------


class NotFoundError(LinguographError):
    """A code or name resolved to nothing in the loaded database."""

    def __init__(self, message: str, hint: str | None = None):
        super().__init__(message)
        self.hint = hint


class AmbiguousCodeError(LinguographError):
    """A deprecated code was split and has several possible successors."""

    def __init__(self, message: str, candidates=(), deprecation=None):
        super().__init__(message)
        self.candidates = list(candidates)
        self.deprecation = deprecation


class TypeMismatchError(LinguographError):
    """A code exists, but not under the identifier type the caller named."""


class MissingTargetError(LinguographError):
    """The resolved entity has no code of the requested target type."""


class NamesUnavailableError(LinguographError):
    """Name lookups were requested but no names table is attached."""


# -- ingest / build errors ---------------------------------------------------


class FetchError(LinguographError):
    """A source could not be fetched and no cached copy exists."""


class FormatError(LinguographError):
    """A source file did not match its declared layout."""


class BuildError(LinguographError):
    """Database assembly failed (collision, injectivity violation, ...)."""


class IntegrityError(LinguographError):
    """A built or loaded database violates a structural invariant."""


# -- store errors ------------------------------------------------------------


class CorruptFileError(LinguographError):
    """Database file bytes are not a valid container."""


class VersionError(LinguographError):
    """Database file was written by a newer, unsupported format version."""


# -- signals errors ----------------------------------------------------------


class DegenerateDataError(LinguographError):
    """A ratings dataset has zero variance and cannot be z-scored."""


class EmptyGraphError(LinguographError):
    """Concept-graph construction produced no usable edges."""


class EmptyPartitionError(LinguographError):
    """A language appears in no edge of the concept graph."""


class UndefinedStatisticError(LinguographError):
    """A statistic is undefined for the given input (zero signal, ...)."""
