"""Unified language-metadata graph with identifier resolution, auditing,
and colexification graph-signal statistics."""

from .audit import AuditReport, CodeVerdict, audit_codes, classify_code
from .core import (
    Database,
    DeprecationRecord,
    EdgeKind,
    Flag,
    IdentifierType,
    Languoid,
    Level,
    Region,
    RegionKind,
    Script,
    validate_identifier,
)
from .errors import (
    AmbiguousCodeError,
    LinguographError,
    MissingTargetError,
    NamesUnavailableError,
    NotFoundError,
    TypeMismatchError,
)
from .pipeline import rebuild
from .resolve import DeprecationNotice, QuerySpec, Resolution, Resolver
from .store import load_database, load_names, serialize_database

__version__ = "0.1.0"

__all__ = [
    "AmbiguousCodeError",
    "AuditReport",
    "CodeVerdict",
    "Database",
    "DeprecationNotice",
    "DeprecationRecord",
    "EdgeKind",
    "Flag",
    "IdentifierType",
    "Languoid",
    "Level",
    "LinguographError",
    "MissingTargetError",
    "NamesUnavailableError",
    "NotFoundError",
    "QuerySpec",
    "Region",
    "RegionKind",
    "Resolution",
    "Resolver",
    "Script",
    "TypeMismatchError",
    "audit_codes",
    "classify_code",
    "load_database",
    "load_names",
    "rebuild",
    "serialize_database",
    "validate_identifier",
]


def load(path=None):
    """Load a database (bundled fixture corpus by default) and return a Resolver."""
    from pathlib import Path

    from .cli import _names_path_for, packaged_database_path

    db_path = Path(path) if path is not None else packaged_database_path()
    db = load_database(db_path)
    names_path = _names_path_for(db_path)
    names = load_names(names_path, db) if names_path.exists() else None
    return Resolver(db, names=names)
