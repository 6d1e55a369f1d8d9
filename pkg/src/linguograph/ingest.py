"""Source fetching, caching, and format-specific parsing into RawRecords.

Every source lives behind a :class:`SourceDescriptor`. Fetching copies the
source files into a content-addressed local cache; parsing turns each cached
file into neutral :class:`RawRecord` facts that carry their provenance so
any merged value can be traced back to a concrete file and row.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .core import ChangeKind, DeprecationRecord, IdentifierType, validate_identifier
from .errors import FetchError, FormatError, IntegrityError

#: Sources parsed by parse_deprecations instead of parse_source.
DEPRECATION_SOURCES = frozenset({"sil_deprecations", "iana_registry"})

#: Attribute names merged by set-union instead of scalar conflict resolution.
SET_VALUED_FIELDS = frozenset({"endonyms", "scripts", "regions", "names_in"})


@dataclass(frozen=True)
class SourceDescriptor:
    source_id: str
    locator: str
    expected_layout: str  # json_per_language | cldf_csv | tsv | registry_text | csv
    pinned_version: Optional[str] = None


@dataclass(frozen=True)
class FetchResult:
    files: tuple[Path, ...]
    version: str
    refreshed: bool


@dataclass(frozen=True)
class RawRecord:
    entity_kind: str  # languoid | script | region
    identifiers: dict[IdentifierType, str]
    attributes: dict
    source_id: str
    source_locator: str

    def __post_init__(self):
        if not self.identifiers:
            raise ValueError(f"RawRecord from {self.source_locator} has no identifiers")
        for id_type, code in self.identifiers.items():
            if not validate_identifier(id_type, code):
                raise ValueError(f"RawRecord from {self.source_locator}: {code!r} is not valid {id_type.value}")


@dataclass(frozen=True)
class ParseProblem:
    source_id: str
    source_locator: str
    message: str


def load_registry(path: Path) -> list[SourceDescriptor]:
    """Read the source registry (INI key-value file) into descriptors.

    Relative locators are resolved against the registry file's directory.
    A ``[policy]`` section, if present, is skipped here and read by the
    merge layer.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FetchError(f"source registry not found: {path}")
    base = Path(path).parent
    descriptors = []
    for section in parser.sections():
        if section == "policy":
            continue
        locator = parser.get(section, "locator")
        locator_path = Path(locator)
        if not locator_path.is_absolute() and "://" not in locator:
            locator = str(base / locator_path)
        descriptors.append(
            SourceDescriptor(
                source_id=section,
                locator=locator,
                expected_layout=parser.get(section, "layout"),
                pinned_version=parser.get(section, "pinned_version", fallback=None),
            )
        )
    ids = [d.source_id for d in descriptors]
    if len(ids) != len(set(ids)):
        raise FetchError(f"duplicate source_id in registry {path}")
    return descriptors


def _source_files(root: Path) -> list[Path]:
    if root.is_file():
        return [root]
    return sorted(p for p in root.rglob("*") if p.is_file())


def _checksum(files: list[Path], root: Path) -> str:
    digest = hashlib.sha256()
    for f in files:
        digest.update(str(f.relative_to(root) if root.is_dir() else f.name).encode())
        digest.update(b"\0")
        digest.update(f.read_bytes())
        digest.update(b"\0")
    return digest.hexdigest()


def _cached_fetch(source_id: str, cache_dir: Path) -> Optional[FetchResult]:
    meta = cache_dir / source_id / "meta"
    if not meta.exists():
        return None
    lines = meta.read_text().splitlines()
    if len(lines) < 2:
        return None
    version = lines[0].strip()
    version_dir = cache_dir / source_id / version
    if not version_dir.is_dir():
        return None
    return FetchResult(files=tuple(_source_files(version_dir)), version=version, refreshed=False)


def fetch_source(
    descriptor: SourceDescriptor,
    cache_dir: Path,
    fetcher: Optional[Callable[[SourceDescriptor, Path], None]] = None,
) -> FetchResult:
    """Bring a source's files into the local cache.

    ``fetcher`` is the pluggable hook for non-file locators: it receives the
    descriptor and a staging directory to populate. Without one, only local
    paths are supported and an unreachable locator falls back to the cache.

    Cache layout: ``<cache>/<source_id>/<version>/...`` plus
    ``<cache>/<source_id>/meta`` holding the version string and checksum,
    one per line.
    """
    cache_dir = Path(cache_dir)
    source_root = Path(descriptor.locator)
    staged: Optional[Path] = None

    if "://" in descriptor.locator and fetcher is not None:
        staged = cache_dir / descriptor.source_id / ".staging"
        if staged.exists():
            shutil.rmtree(staged)
        staged.mkdir(parents=True)
        fetcher(descriptor, staged)
        source_root = staged
    elif not source_root.exists():
        cached = _cached_fetch(descriptor.source_id, cache_dir)
        if cached is not None:
            return cached
        raise FetchError(f"source {descriptor.source_id!r}: locator {descriptor.locator!r} unreachable and no cached copy")

    files = _source_files(source_root)
    if not files:
        raise FetchError(f"source {descriptor.source_id!r}: no files at {descriptor.locator!r}")
    checksum = _checksum(files, source_root)
    if descriptor.pinned_version is not None and checksum != descriptor.pinned_version:
        raise IntegrityError(
            f"source {descriptor.source_id!r}: checksum {checksum[:12]} does not match pinned {descriptor.pinned_version[:12]}"
        )

    version_file = next((f for f in files if f.name == "VERSION"), None)
    version = version_file.read_text().strip() if version_file else f"sha256-{checksum[:12]}"

    meta = cache_dir / descriptor.source_id / "meta"
    if meta.exists():
        lines = meta.read_text().splitlines()
        if len(lines) >= 2 and lines[0].strip() == version and lines[1].strip() == checksum:
            cached = _cached_fetch(descriptor.source_id, cache_dir)
            if cached is not None:
                if staged is not None:
                    shutil.rmtree(staged)
                return cached

    version_dir = cache_dir / descriptor.source_id / version
    if version_dir.exists():
        shutil.rmtree(version_dir)
    version_dir.mkdir(parents=True)
    for f in files:
        rel = f.relative_to(source_root) if source_root.is_dir() else Path(f.name)
        target = version_dir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(f, target)
    meta.parent.mkdir(parents=True, exist_ok=True)
    meta.write_text(f"{version}\n{checksum}\n")
    if staged is not None:
        shutil.rmtree(staged)
    return FetchResult(files=tuple(_source_files(version_dir)), version=version, refreshed=True)


# ---------------------------------------------------------------------------
# Parsers. One function per layout; each yields RawRecords and appends
# row-level failures to ``problems`` instead of aborting the build.
# ---------------------------------------------------------------------------


def _put(identifiers: dict, id_type: IdentifierType, code: str) -> None:
    if code:
        identifiers[id_type] = code


def _report(problems: Optional[list], source_id: str, locator: str, message: str) -> None:
    if problems is not None:
        problems.append(ParseProblem(source_id, locator, message))


def _parse_linguameta(descriptor: SourceDescriptor, files: list[Path], problems) -> list[RawRecord]:
    records: list[RawRecord] = []
    for f in files:
        if f.suffix != ".json":
            continue
        locator = f"{f.name}"
        try:
            doc = json.loads(f.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            _report(problems, descriptor.source_id, locator, f"unparseable JSON: {exc}")
            continue
        identifiers: dict[IdentifierType, str] = {}
        _put(identifiers, IdentifierType.BCP47, doc.get("bcp47", ""))
        _put(identifiers, IdentifierType.ISO639_1, doc.get("iso639_1", ""))
        _put(identifiers, IdentifierType.ISO639_3, doc.get("iso639_3", ""))
        _put(identifiers, IdentifierType.WIKIDATA_QID, doc.get("wikidata_qid", ""))
        attributes: dict = {}
        if doc.get("name"):
            attributes["name"] = doc["name"]
        if doc.get("endonyms"):
            attributes["endonyms"] = list(doc["endonyms"])
        if doc.get("speaker_count") is not None:
            attributes["speaker_count"] = int(doc["speaker_count"])
        if doc.get("scripts"):
            attributes["scripts"] = list(doc["scripts"])
        region_codes = []
        for entry in doc.get("regions", []):
            region_codes.append(entry["code"])
            try:
                records.append(
                    RawRecord(
                        entity_kind="region",
                        identifiers={IdentifierType.ISO3166_1_ALPHA2: entry["code"]},
                        attributes={
                            k: v
                            for k, v in (("name", entry.get("name")), ("historical", entry.get("historical")))
                            if v is not None
                        },
                        source_id=descriptor.source_id,
                        source_locator=f"{locator}#regions/{entry['code']}",
                    )
                )
            except ValueError as exc:
                _report(problems, descriptor.source_id, locator, str(exc))
        if region_codes:
            attributes["regions"] = region_codes
        try:
            records.append(
                RawRecord(
                    entity_kind="languoid",
                    identifiers=identifiers,
                    attributes=attributes,
                    source_id=descriptor.source_id,
                    source_locator=locator,
                )
            )
        except ValueError as exc:
            _report(problems, descriptor.source_id, locator, str(exc))
    return records


def _parse_glottolog(descriptor: SourceDescriptor, files: list[Path], problems) -> list[RawRecord]:
    records: list[RawRecord] = []
    table = next((f for f in files if f.name == "languoids.csv"), None)
    if table is None:
        raise FormatError(f"source {descriptor.source_id!r}: expected a languoids.csv table")
    with open(table, newline="", encoding="utf-8") as handle:
        for row_no, row in enumerate(csv.DictReader(handle), start=2):
            locator = f"{table.name}:{row_no}"
            identifiers: dict[IdentifierType, str] = {}
            _put(identifiers, IdentifierType.GLOTTOCODE, (row.get("ID") or "").strip())
            _put(identifiers, IdentifierType.ISO639_3, (row.get("ISO639P3code") or "").strip())
            attributes: dict = {}
            if row.get("Name"):
                attributes["name"] = row["Name"].strip()
            if row.get("Level"):
                attributes["level"] = row["Level"].strip()
            if (row.get("Parent_ID") or "").strip():
                attributes["parent_glottocode"] = row["Parent_ID"].strip()
            countries = [c.strip() for c in (row.get("Countries") or "").split(";") if c.strip()]
            if countries:
                attributes["regions"] = countries
            if (row.get("Macroarea") or "").strip():
                attributes["macroarea"] = row["Macroarea"].strip()
            try:
                records.append(
                    RawRecord(
                        entity_kind="languoid",
                        identifiers=identifiers,
                        attributes=attributes,
                        source_id=descriptor.source_id,
                        source_locator=locator,
                    )
                )
            except ValueError as exc:
                _report(problems, descriptor.source_id, locator, str(exc))
    return records


def _parse_glotscript(descriptor: SourceDescriptor, files: list[Path], problems) -> list[RawRecord]:
    records: list[RawRecord] = []
    for f in files:
        if f.suffix != ".tsv":
            continue
        for row_no, line in enumerate(f.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            locator = f"{f.name}:{row_no}"
            parts = line.split("\t")
            if len(parts) < 2:
                _report(problems, descriptor.source_id, locator, "expected two tab-separated columns")
                continue
            code, scripts = parts[0].strip(), [s for s in parts[1].replace(",", " ").split() if s]
            try:
                records.append(
                    RawRecord(
                        entity_kind="languoid",
                        identifiers={IdentifierType.ISO639_3: code},
                        attributes={"scripts": scripts},
                        source_id=descriptor.source_id,
                        source_locator=locator,
                    )
                )
            except ValueError as exc:
                _report(problems, descriptor.source_id, locator, str(exc))
    return records


_ISO_TYPE_FLAGS = {"A": "historical", "H": "historical", "E": "historical", "C": "constructed", "U": "unattested"}


def _parse_iso_tables(descriptor: SourceDescriptor, files: list[Path], problems) -> list[RawRecord]:
    records: list[RawRecord] = []
    handlers = {
        "iso639_3.csv": _iso639_3_rows,
        "iso639_2.csv": _iso639_2_rows,
        "iso639_5.csv": _iso639_5_rows,
        "iso3166_1.csv": _iso3166_1_rows,
        "iso3166_2.csv": _iso3166_2_rows,
        "iso3166_3.csv": _iso3166_3_rows,
        "iso15924.csv": _iso15924_rows,
    }
    for f in files:
        handler = handlers.get(f.name)
        if handler is None:
            continue
        with open(f, newline="", encoding="utf-8") as handle:
            for row_no, row in enumerate(csv.DictReader(handle), start=2):
                locator = f"{f.name}:{row_no}"
                try:
                    record = handler(row, descriptor.source_id, locator)
                except (ValueError, KeyError) as exc:
                    _report(problems, descriptor.source_id, locator, str(exc))
                    continue
                if record is not None:
                    records.append(record)
    return records


def _iso639_3_rows(row, source_id, locator) -> RawRecord:
    identifiers: dict[IdentifierType, str] = {}
    _put(identifiers, IdentifierType.ISO639_3, row["alpha_3"].strip())
    _put(identifiers, IdentifierType.ISO639_1, (row.get("alpha_2") or "").strip())
    attributes: dict = {"name": row["name"].strip()}
    scope = (row.get("scope") or "I").strip()
    if scope == "M":
        attributes["level"] = "macrolanguage"
    lang_type = (row.get("type") or "L").strip()
    if lang_type in _ISO_TYPE_FLAGS:
        attributes[_ISO_TYPE_FLAGS[lang_type]] = True
    macro = (row.get("macrolanguage") or "").strip()
    if macro:
        attributes["macrolanguage_of"] = macro
    return RawRecord("languoid", identifiers, attributes, source_id, locator)


def _iso639_2_rows(row, source_id, locator) -> RawRecord:
    # The terminological set is a subset of ISO 639-3, so the T code is
    # ingested under iso639_3 and only a membership marker is kept.
    identifiers: dict[IdentifierType, str] = {}
    _put(identifiers, IdentifierType.ISO639_2B, row["bibliographic"].strip())
    _put(identifiers, IdentifierType.ISO639_3, row["terminological"].strip())
    _put(identifiers, IdentifierType.ISO639_1, (row.get("alpha_2") or "").strip())
    return RawRecord("languoid", identifiers, {"name": row["name"].strip(), "in_iso639_2": True}, source_id, locator)


def _iso639_5_rows(row, source_id, locator) -> RawRecord:
    return RawRecord(
        "languoid",
        {IdentifierType.ISO639_5: row["code"].strip()},
        {"name": row["name"].strip(), "level": "family"},
        source_id,
        locator,
    )


def _iso3166_1_rows(row, source_id, locator) -> RawRecord:
    identifiers: dict[IdentifierType, str] = {}
    _put(identifiers, IdentifierType.ISO3166_1_ALPHA2, row["alpha_2"].strip())
    _put(identifiers, IdentifierType.ISO3166_1_ALPHA3, (row.get("alpha_3") or "").strip())
    return RawRecord("region", identifiers, {"name": row["name"].strip(), "kind": "country", "historical": False}, source_id, locator)


def _iso3166_2_rows(row, source_id, locator) -> RawRecord:
    attributes = {"name": row["name"].strip(), "kind": "subdivision"}
    parent = (row.get("parent") or "").strip()
    if parent:
        attributes["parent_region"] = parent
    return RawRecord("region", {IdentifierType.ISO3166_2: row["code"].strip()}, attributes, source_id, locator)


def _iso3166_3_rows(row, source_id, locator) -> RawRecord:
    identifiers: dict[IdentifierType, str] = {}
    _put(identifiers, IdentifierType.ISO3166_3, row["alpha_4"].strip())
    _put(identifiers, IdentifierType.ISO3166_1_ALPHA2, (row.get("former_alpha_2") or "").strip())
    attributes: dict = {"name": row["name"].strip(), "kind": "former_country", "historical": True}
    if (row.get("withdrawal") or "").strip():
        attributes["withdrawal_year"] = int(row["withdrawal"].strip())
    return RawRecord("region", identifiers, attributes, source_id, locator)


def _iso15924_rows(row, source_id, locator) -> RawRecord:
    attributes: dict = {"name": row["name"].strip()}
    if (row.get("numeric") or "").strip():
        attributes["numeric_code"] = row["numeric"].strip()
    aliases = [a.strip() for a in (row.get("aliases") or "").split(";") if a.strip()]
    if aliases:
        attributes["aliases"] = aliases
    return RawRecord("script", {IdentifierType.ISO15924: row["code"].strip()}, attributes, source_id, locator)


def _parse_wikidata_map(descriptor: SourceDescriptor, files: list[Path], problems) -> list[RawRecord]:
    records: list[RawRecord] = []
    columns = {
        "iso639_1": IdentifierType.ISO639_1,
        "iso639_3": IdentifierType.ISO639_3,
        "iso639_5": IdentifierType.ISO639_5,
        "glottocode": IdentifierType.GLOTTOCODE,
    }
    for f in files:
        if f.name == "wikidata_map.tsv":
            with open(f, newline="", encoding="utf-8") as handle:
                for row_no, row in enumerate(csv.DictReader(handle, delimiter="\t"), start=2):
                    locator = f"{f.name}:{row_no}"
                    identifiers = {IdentifierType.WIKIDATA_QID: (row.get("qid") or "").strip()}
                    for column, id_type in columns.items():
                        _put(identifiers, id_type, (row.get(column) or "").strip())
                    try:
                        records.append(RawRecord("languoid", identifiers, {}, descriptor.source_id, locator))
                    except ValueError as exc:
                        _report(problems, descriptor.source_id, locator, str(exc))
        elif f.name == "names.tsv":
            with open(f, newline="", encoding="utf-8") as handle:
                for row_no, row in enumerate(csv.DictReader(handle, delimiter="\t"), start=2):
                    locator = f"{f.name}:{row_no}"
                    try:
                        records.append(
                            RawRecord(
                                "languoid",
                                {IdentifierType.ISO639_3: row["subject"].strip()},
                                {"names_in": [(row["in_lang"].strip(), row["name"].strip())]},
                                descriptor.source_id,
                                locator,
                            )
                        )
                    except (ValueError, KeyError) as exc:
                        _report(problems, descriptor.source_id, locator, str(exc))
    return records


_LAYOUT_PARSERS = {
    "json_per_language": _parse_linguameta,
    "cldf_csv": _parse_glottolog,
    "csv": _parse_iso_tables,
}


def parse_source(descriptor: SourceDescriptor, files: list[Path], problems: Optional[list[ParseProblem]] = None) -> list[RawRecord]:
    """Parse one fetched source into RawRecords.

    Malformed rows are skipped and reported through ``problems``; an entirely
    unusable source (zero records from non-empty files) raises FormatError.
    """
    files = [Path(f) for f in files if Path(f).name != "VERSION"]
    if descriptor.expected_layout == "tsv":
        parser = _parse_glotscript if descriptor.source_id != "wikidata_map" else _parse_wikidata_map
    else:
        parser = _LAYOUT_PARSERS.get(descriptor.expected_layout)
    if parser is None:
        raise FormatError(f"source {descriptor.source_id!r}: unsupported layout {descriptor.expected_layout!r}")
    try:
        records = parser(descriptor, files, problems)
    except OSError as exc:
        raise FormatError(f"source {descriptor.source_id!r}: unreadable file: {exc}") from exc
    if not records and files:
        raise FormatError(
            f"source {descriptor.source_id!r}: zero records parsed from non-empty files (layout mismatch?)"
        )
    records.sort(key=lambda r: (r.source_id, r.source_locator))
    return records


# ---------------------------------------------------------------------------
# Deprecation sources
# ---------------------------------------------------------------------------

_SIL_CHANGE_KINDS = {"S": ChangeKind.SPLIT, "M": ChangeKind.MERGE, "C": ChangeKind.REPLACE, "R": ChangeKind.REPLACE, "N": ChangeKind.RETIRE}


def _parse_sil_retirements(descriptor, files, problems) -> list[DeprecationRecord]:
    records = []
    for f in files:
        if f.suffix != ".tsv":
            continue
        with open(f, newline="", encoding="utf-8") as handle:
            for row_no, row in enumerate(csv.DictReader(handle, delimiter="\t"), start=2):
                locator = f"{f.name}:{row_no}"
                code = (row.get("code") or "").strip()
                change = (row.get("change_type") or "").strip().upper()
                replacements = tuple(r.strip() for r in (row.get("replacements") or "").split(";") if r.strip())
                year = (row.get("year") or "").strip()
                kind = _SIL_CHANGE_KINDS.get(change)
                if kind is None:
                    _report(problems, descriptor.source_id, locator, f"unknown change type {change!r}")
                    continue
                bad = [r for r in replacements if not validate_identifier(IdentifierType.ISO639_3, r)]
                if bad or not validate_identifier(IdentifierType.ISO639_3, code):
                    _report(problems, descriptor.source_id, locator, f"invalid code in row: {bad or [code]}")
                    continue
                try:
                    records.append(
                        DeprecationRecord(
                            code=code,
                            id_type=IdentifierType.ISO639_3,
                            change_kind=kind,
                            replacements=replacements,
                            year=int(year) if year else None,
                            source=descriptor.source_id,
                            name=(row.get("name") or "").strip() or None,
                        )
                    )
                except ValueError as exc:
                    _report(problems, descriptor.source_id, locator, str(exc))
    return records


def _iana_records(text: str):
    """Split an IANA language-subtag registry into field dictionaries."""
    for chunk in text.split("%%"):
        fields: dict[str, str] = {}
        last_key = None
        for line in chunk.splitlines():
            if not line.strip():
                continue
            if line.startswith(" ") and last_key:  # continuation line
                fields[last_key] += " " + line.strip()
            elif ":" in line:
                key, _, value = line.partition(":")
                last_key = key.strip()
                fields[last_key] = value.strip()
        if fields:
            yield fields


def _parse_iana_registry(descriptor, files, problems) -> list[DeprecationRecord]:
    records = []
    for f in files:
        text = f.read_text(encoding="utf-8")
        for n, fields in enumerate(_iana_records(text), start=1):
            locator = f"{f.name}#record{n}"
            if fields.get("Type") != "language" or "Deprecated" not in fields:
                continue
            subtag = fields.get("Subtag", "")
            id_type = IdentifierType.ISO639_1 if len(subtag) == 2 else IdentifierType.ISO639_3
            if not validate_identifier(id_type, subtag):
                _report(problems, descriptor.source_id, locator, f"invalid subtag {subtag!r}")
                continue
            preferred = fields.get("Preferred-Value", "").strip()
            if preferred and not validate_identifier(id_type, preferred):
                _report(problems, descriptor.source_id, locator, f"invalid preferred value {preferred!r}")
                continue
            year = None
            deprecated = fields.get("Deprecated", "")
            if len(deprecated) >= 4 and deprecated[:4].isdigit():
                year = int(deprecated[:4])
            records.append(
                DeprecationRecord(
                    code=subtag,
                    id_type=id_type,
                    change_kind=ChangeKind.REPLACE if preferred else ChangeKind.RETIRE,
                    replacements=(preferred,) if preferred else (),
                    year=year,
                    source=descriptor.source_id,
                    name=fields.get("Description") or None,
                )
            )
    return records


def parse_deprecations(descriptor: SourceDescriptor, files: list[Path], problems: Optional[list[ParseProblem]] = None) -> list[DeprecationRecord]:
    """Parse a retirement table (SIL tsv layout) or IANA registry snapshot."""
    files = [Path(f) for f in files if Path(f).name != "VERSION"]
    if descriptor.expected_layout == "registry_text":
        records = _parse_iana_registry(descriptor, files, problems)
    elif descriptor.expected_layout == "tsv":
        records = _parse_sil_retirements(descriptor, files, problems)
    else:
        raise FormatError(f"source {descriptor.source_id!r}: layout {descriptor.expected_layout!r} is not a deprecation layout")
    records.sort(key=lambda r: (r.id_type.value, r.code))
    return records
