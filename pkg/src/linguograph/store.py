"""On-disk format: canonical JSON, gzip-compressed, byte-deterministic.

The container is a single JSON document with sorted keys and arrays in
internal-id order, compressed with fixed gzip parameters (level 9, zeroed
mtime) so that identical inputs always produce identical bytes. Writes are
atomic (temp file + rename). Names live in a companion file that is only
decompressed on first use.
"""

from __future__ import annotations

import gzip
import json
import os
import threading
from pathlib import Path
from typing import Optional

from .core import (
    BuildMeta,
    ChangeKind,
    Database,
    DeprecationRecord,
    Edge,
    EdgeKind,
    Flag,
    IdentifierType,
    Languoid,
    Level,
    Region,
    RegionKind,
    Script,
)
from .errors import CorruptFileError, IntegrityError, NamesUnavailableError, VersionError

SUPPORTED_MAJOR = 1

DB_SUFFIX = ".lgdb.gz"
NAMES_SUFFIX = ".lgnames.gz"

# Marker used to store an ISO 639-2T code that equals the entity's
# ISO 639-3 code (the terminological set is a subset of 639-3).
_SAME_AS_639_3 = True


def _canonical_bytes(document: dict) -> bytes:
    text = json.dumps(document, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return gzip.compress(text.encode("utf-8"), compresslevel=9, mtime=0)


def _atomic_write(path: Path, payload: bytes) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)
    return len(payload)


def _languoid_doc(languoid: Languoid) -> dict:
    codes = {t.value: c for t, c in languoid.codes.items()}
    if codes.get("iso639_2t") and codes["iso639_2t"] == codes.get("iso639_3"):
        codes["iso639_2t"] = _SAME_AS_639_3
    doc = {
        "name": languoid.reference_name,
        "level": languoid.level.value,
        "codes": codes,
        "sources": sorted(languoid.source_provenance),
    }
    if languoid.endonyms:
        doc["endonyms"] = list(languoid.endonyms)
    if languoid.flags:
        doc["flags"] = sorted(f.value for f in languoid.flags)
    if languoid.speaker_count is not None:
        doc["speaker_count"] = languoid.speaker_count
    if languoid.retired_code is not None:
        doc["retired_code"] = languoid.retired_code
    return doc


def _region_doc(region: Region) -> dict:
    doc = {
        "name": region.name,
        "kind": region.region_kind.value,
        "codes": {t.value: c for t, c in region.codes.items()},
        "historical": region.historical,
        "sources": sorted(region.source_provenance),
    }
    if region.parent is not None:
        doc["parent"] = region.parent
    return doc


def _script_doc(script: Script) -> dict:
    doc = {"code": script.iso15924_code, "name": script.name, "sources": sorted(script.source_provenance)}
    if script.numeric_code is not None:
        doc["numeric"] = script.numeric_code
    if script.aliases:
        doc["aliases"] = list(script.aliases)
    return doc


def database_document(db: Database) -> dict:
    """The canonical JSON form of a Database (sorted keys, id-ordered arrays)."""
    return {
        "format_version": db.build_meta.format_version,
        "build_meta": {
            "source_versions": dict(sorted(db.build_meta.source_versions.items())),
            "build_timestamp": db.build_meta.build_timestamp,
        },
        "languoids": {i: _languoid_doc(l) for i, l in sorted(db.languoids.items())},
        "scripts": {i: _script_doc(s) for i, s in sorted(db.scripts.items())},
        "regions": {i: _region_doc(r) for i, r in sorted(db.regions.items())},
        "edges": [
            {"kind": e.kind.value, "from": e.src, "to": e.dst, "sources": list(e.sources)}
            for e in sorted(db.edges, key=lambda e: (e.kind.value, e.src, e.dst))
        ],
        "deprecations": [
            {
                "code": d.code,
                "id_type": d.id_type.value,
                "change_kind": d.change_kind.value,
                "replacements": list(d.replacements),
                "year": d.year,
                "source": d.source,
                "name": d.name,
            }
            for _, d in sorted(db.deprecations.items(), key=lambda kv: (kv[0][0].value, kv[0][1]))
        ],
    }


def serialize_database(db: Database, path: Path) -> int:
    """Write the database file; returns the byte count written."""
    db.validate()
    return _atomic_write(Path(path), _canonical_bytes(database_document(db)))


def _read_container(path: Path) -> dict:
    path = Path(path)
    try:
        raw = gzip.decompress(path.read_bytes())
    except (OSError, EOFError, gzip.BadGzipFile) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise CorruptFileError(f"{path}: not a valid compressed container ({exc})") from exc
    try:
        document = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFileError(f"{path}: container does not hold valid JSON ({exc})") from exc
    if not isinstance(document, dict):
        raise CorruptFileError(f"{path}: unexpected top-level JSON type")
    return document


def _check_version(document: dict, path: Path) -> None:
    version = str(document.get("format_version", ""))
    major = version.split(".", 1)[0]
    if not major.isdigit() or int(major) > SUPPORTED_MAJOR:
        raise VersionError(
            f"{path}: format_version {version!r} is newer than supported major {SUPPORTED_MAJOR}; rebuild the database"
        )


def load_database(path: Path) -> Database:
    """Load and validate a database file written by serialize_database."""
    document = _read_container(path)
    _check_version(document, path)
    try:
        db = _database_from_document(document)
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptFileError(f"{path}: malformed database document ({exc})") from exc
    db.validate()
    return db


def _database_from_document(document: dict) -> Database:
    meta_doc = document.get("build_meta", {})
    db = Database(
        build_meta=BuildMeta(
            format_version=str(document["format_version"]),
            source_versions=dict(meta_doc.get("source_versions", {})),
            build_timestamp=meta_doc.get("build_timestamp", "1970-01-01T00:00:00Z"),
        )
    )
    for internal_id, doc in document.get("languoids", {}).items():
        codes_doc = dict(doc.get("codes", {}))
        if codes_doc.get("iso639_2t") is _SAME_AS_639_3:
            codes_doc["iso639_2t"] = codes_doc["iso639_3"]
        codes = {IdentifierType(t): c for t, c in codes_doc.items()}
        db.languoids[internal_id] = Languoid(
            internal_id=internal_id,
            reference_name=doc["name"],
            level=Level(doc["level"]),
            codes=dict(sorted(codes.items(), key=lambda kv: kv[0].value)),
            endonyms=tuple(doc.get("endonyms", ())),
            flags=frozenset(Flag(f) for f in doc.get("flags", ())),
            speaker_count=doc.get("speaker_count"),
            source_provenance=frozenset(doc.get("sources", ())),
            retired_code=doc.get("retired_code"),
        )
    for internal_id, doc in document.get("scripts", {}).items():
        db.scripts[internal_id] = Script(
            iso15924_code=doc["code"],
            name=doc["name"],
            numeric_code=doc.get("numeric"),
            aliases=tuple(doc.get("aliases", ())),
            source_provenance=frozenset(doc.get("sources", ())),
        )
    for internal_id, doc in document.get("regions", {}).items():
        db.regions[internal_id] = Region(
            internal_id=internal_id,
            name=doc["name"],
            region_kind=RegionKind(doc["kind"]),
            codes={IdentifierType(t): c for t, c in doc.get("codes", {}).items()},
            historical=bool(doc.get("historical", False)),
            parent=doc.get("parent"),
            source_provenance=frozenset(doc.get("sources", ())),
        )
    for doc in document.get("edges", ()):
        db.edges.append(
            Edge(kind=EdgeKind(doc["kind"]), src=doc["from"], dst=doc["to"], sources=tuple(doc.get("sources", ())))
        )
    for doc in document.get("deprecations", ()):
        record = DeprecationRecord(
            code=doc["code"],
            id_type=IdentifierType(doc["id_type"]),
            change_kind=ChangeKind(doc["change_kind"]),
            replacements=tuple(doc.get("replacements", ())),
            year=doc.get("year"),
            source=doc.get("source", ""),
            name=doc.get("name"),
        )
        db.deprecations[(record.id_type, record.code)] = record

    # Rebuild the lookup index: every current code, plus composite aliases.
    for table in (db.languoids, db.regions):
        for internal_id, node in table.items():
            for id_type, code in node.codes.items():
                existing = db.id_index.get((id_type, code))
                if existing is not None and existing != internal_id:
                    raise IntegrityError(f"id_index collision on {id_type.value}:{code}")
                db.id_index[(id_type, code)] = internal_id
    for internal_id, script in db.scripts.items():
        db.id_index[(IdentifierType.ISO15924, script.iso15924_code)] = internal_id
    for key in db.deprecations:
        db.id_index.pop(key, None)
    return db


# ---------------------------------------------------------------------------
# Names
# ---------------------------------------------------------------------------


def serialize_names(rows: list[dict], db: Database, path: Path) -> int:
    """Write the companion names file (same canonical container scheme)."""
    for row in rows:
        if db.node(row["subject"]) is None:
            raise IntegrityError(f"names row subject {row['subject']!r} not present in database")
    document = {
        "format_version": db.build_meta.format_version,
        "rows": [
            [row["subject"], row["in_language"], row["name"], bool(row["is_endonym"]), row["source_id"]]
            for row in rows
        ],
    }
    return _atomic_write(Path(path), _canonical_bytes(document))


class NamesTable:
    """Lazy handle over a names file.

    Constructing the handle reads nothing; the file is decompressed once, on
    the first query, and the parsed table is reused afterwards. ``load_count``
    exists so the laziness contract is observable.
    """

    def __init__(self, path: Path, db: Database):
        self._path = Path(path)
        self._db = db
        self._lock = threading.Lock()
        self._by_subject: Optional[dict[str, list[tuple[str, str, bool, str]]]] = None
        self.load_count = 0

    def _ensure_loaded(self) -> None:
        with self._lock:
            if self._by_subject is not None:
                return
            if not self._path.exists():
                raise NamesUnavailableError(f"names file not found: {self._path}")
            document = _read_container(self._path)
            _check_version(document, self._path)
            by_subject: dict[str, list[tuple[str, str, bool, str]]] = {}
            for row in document.get("rows", ()):
                subject, in_language, name, is_endonym, source_id = row
                if self._db.node(subject) is None:
                    raise IntegrityError(f"{self._path}: names row subject {subject!r} not in companion database")
                by_subject.setdefault(subject, []).append((in_language, name, bool(is_endonym), source_id))
            self._by_subject = by_subject
            self.load_count += 1

    def names_for(self, subject_id: str, in_language_id: str) -> list[str]:
        """Names of ``subject`` given in the language node ``in_language_id``."""
        self._ensure_loaded()
        assert self._by_subject is not None
        seen = []
        for in_language, name, _is_endonym, _source in self._by_subject.get(subject_id, ()):
            if in_language == in_language_id and name not in seen:
                seen.append(name)
        return seen


def load_names(path: Path, db: Database) -> NamesTable:
    """Return a lazy names handle; no bytes are read until the first query."""
    return NamesTable(path, db)
