"""Domain model: identifier standards, languoids, scripts, regions, edges.

Everything here is an immutable value object; a built ``Database`` is never
mutated after assembly and is safe to share between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import IntegrityError


class IdentifierType(str, Enum):
    # languoid standards
    ISO639_1 = "iso639_1"
    ISO639_2B = "iso639_2b"
    ISO639_2T = "iso639_2t"
    ISO639_3 = "iso639_3"
    ISO639_5 = "iso639_5"
    GLOTTOCODE = "glottocode"
    WIKIDATA_QID = "wikidata_qid"
    BCP47 = "bcp47"
    LANG_SCRIPT = "lang_script"
    # script standard
    ISO15924 = "iso15924"
    # region standards
    ISO3166_1_ALPHA2 = "iso3166_1_alpha2"
    ISO3166_1_ALPHA3 = "iso3166_1_alpha3"
    ISO3166_2 = "iso3166_2"
    ISO3166_3 = "iso3166_3"


#: The nine languoid-level code standards supported for resolution.
LANGUOID_TYPES = frozenset(
    {
        IdentifierType.ISO639_1,
        IdentifierType.ISO639_2B,
        IdentifierType.ISO639_2T,
        IdentifierType.ISO639_3,
        IdentifierType.ISO639_5,
        IdentifierType.GLOTTOCODE,
        IdentifierType.WIKIDATA_QID,
        IdentifierType.BCP47,
        IdentifierType.LANG_SCRIPT,
    }
)

REGION_TYPES = frozenset(
    {
        IdentifierType.ISO3166_1_ALPHA2,
        IdentifierType.ISO3166_1_ALPHA3,
        IdentifierType.ISO3166_2,
        IdentifierType.ISO3166_3,
    }
)

SCRIPT_TYPES = frozenset({IdentifierType.ISO15924})

# Surface grammar per standard. Purely syntactic; existence is a database
# question, not a validation question. BCP-47 is restricted to the
# ``lang`` / ``lang_Script`` shapes; full tag grammar is out of scope.
_PATTERNS: dict[IdentifierType, re.Pattern] = {
    IdentifierType.ISO639_1: re.compile(r"[a-z]{2}"),
    IdentifierType.ISO639_2B: re.compile(r"[a-z]{3}"),
    IdentifierType.ISO639_2T: re.compile(r"[a-z]{3}"),
    IdentifierType.ISO639_3: re.compile(r"[a-z]{3}"),
    IdentifierType.ISO639_5: re.compile(r"[a-z]{3}"),
    IdentifierType.GLOTTOCODE: re.compile(r"[a-z0-9]{4}[0-9]{4}"),
    IdentifierType.WIKIDATA_QID: re.compile(r"Q[0-9]+"),
    IdentifierType.BCP47: re.compile(r"[a-z]{2,3}(_[A-Z][a-z]{3})?"),
    IdentifierType.LANG_SCRIPT: re.compile(r"[a-z]{2,3}_[A-Z][a-z]{3}"),
    IdentifierType.ISO15924: re.compile(r"[A-Z][a-z]{3}"),
    IdentifierType.ISO3166_1_ALPHA2: re.compile(r"[A-Z]{2}"),
    IdentifierType.ISO3166_1_ALPHA3: re.compile(r"[A-Z]{3}"),
    IdentifierType.ISO3166_2: re.compile(r"[A-Z]{2}-[A-Z0-9]{1,3}"),
    IdentifierType.ISO3166_3: re.compile(r"[A-Z]{4}"),
}


def validate_identifier(id_type: IdentifierType, code: str) -> bool:
    """True iff ``code`` matches the surface grammar of ``id_type``.

    Total and deterministic: never raises, performs no existence check.
    """
    if not isinstance(code, str):
        return False
    pattern = _PATTERNS.get(id_type)
    if pattern is None:
        return False
    return pattern.fullmatch(code) is not None


class Level(str, Enum):
    FAMILY = "family"
    LANGUAGE = "language"
    DIALECT = "dialect"
    MACROLANGUAGE = "macrolanguage"
    OTHER = "other"


class Flag(str, Enum):
    HISTORICAL = "historical"
    CONSTRUCTED = "constructed"
    UNATTESTED = "unattested"
    MACROLANGUAGE = "macrolanguage"


class RegionKind(str, Enum):
    COUNTRY = "country"
    SUBDIVISION = "subdivision"
    FORMER_COUNTRY = "former_country"
    CONTINENT = "continent"
    MACROAREA = "macroarea"
    OTHER = "other"


class EdgeKind(str, Enum):
    CHILD_OF = "child_of"  # languoid -> languoid (genealogy)
    WRITTEN_IN = "written_in"  # languoid -> script
    SPOKEN_IN = "spoken_in"  # languoid -> region
    CONTAINED_IN = "contained_in"  # region -> region
    REPLACED_BY = "replaced_by"  # retired languoid -> current languoid


class ChangeKind(str, Enum):
    REPLACE = "replace"
    SPLIT = "split"
    MERGE = "merge"
    RETIRE = "retire"


@dataclass(frozen=True)
class Languoid:
    """A language, variety of a language, or group of languages."""

    internal_id: str
    reference_name: str
    level: Level
    codes: dict[IdentifierType, str] = field(default_factory=dict)
    endonyms: tuple[str, ...] = ()
    flags: frozenset[Flag] = frozenset()
    speaker_count: Optional[int] = None
    source_provenance: frozenset[str] = frozenset()
    #: retired ISO code carried by stub nodes created for split/merge
    #: deprecations; never indexed, display only.
    retired_code: Optional[str] = None

    @property
    def kind(self) -> str:
        return "languoid"


@dataclass(frozen=True)
class Script:
    """A writing system, keyed by its ISO 15924 code."""

    iso15924_code: str
    name: str
    numeric_code: Optional[str] = None
    aliases: tuple[str, ...] = ()
    source_provenance: frozenset[str] = frozenset()

    @property
    def internal_id(self) -> str:
        return f"scr-{self.iso15924_code}"

    @property
    def reference_name(self) -> str:
        return self.name

    @property
    def kind(self) -> str:
        return "script"


@dataclass(frozen=True)
class Region:
    """A geographic entity: country, subdivision, macro-area, ..."""

    internal_id: str
    name: str
    region_kind: RegionKind
    codes: dict[IdentifierType, str] = field(default_factory=dict)
    historical: bool = False
    parent: Optional[str] = None  # internal_id of the containing region
    source_provenance: frozenset[str] = frozenset()

    @property
    def reference_name(self) -> str:
        return self.name

    @property
    def kind(self) -> str:
        return "region"


@dataclass(frozen=True)
class Edge:
    kind: EdgeKind
    src: str
    dst: str
    sources: tuple[str, ...] = ()


@dataclass(frozen=True)
class DeprecationRecord:
    code: str
    id_type: IdentifierType
    change_kind: ChangeKind
    replacements: tuple[str, ...] = ()
    year: Optional[int] = None
    source: str = ""
    name: Optional[str] = None  # display name of the retired entity, if known

    def __post_init__(self):
        n = len(self.replacements)
        if self.change_kind is ChangeKind.REPLACE and n != 1:
            raise ValueError(f"replace deprecation of {self.code!r} needs exactly one replacement, got {n}")
        if self.change_kind is ChangeKind.SPLIT and n < 2:
            raise ValueError(f"split deprecation of {self.code!r} needs >=2 replacements, got {n}")
        if self.change_kind is ChangeKind.RETIRE and n != 0:
            raise ValueError(f"retirement of {self.code!r} must not carry replacements")
        if self.change_kind is ChangeKind.MERGE and n < 1:
            raise ValueError(f"merge deprecation of {self.code!r} needs >=1 replacement")


@dataclass(frozen=True)
class BuildMeta:
    format_version: str
    source_versions: dict[str, str] = field(default_factory=dict)
    build_timestamp: str = "1970-01-01T00:00:00Z"


# Allowed (source kind, target kind) per edge kind; used by the validation
# pass after assembly and after load.
_EDGE_ENDPOINT_KINDS: dict[EdgeKind, tuple[str, str]] = {
    EdgeKind.CHILD_OF: ("languoid", "languoid"),
    EdgeKind.WRITTEN_IN: ("languoid", "script"),
    EdgeKind.SPOKEN_IN: ("languoid", "region"),
    EdgeKind.CONTAINED_IN: ("region", "region"),
    EdgeKind.REPLACED_BY: ("languoid", "languoid"),
}


@dataclass
class Database:
    """The assembled, immutable metadata graph plus its lookup indexes."""

    languoids: dict[str, Languoid] = field(default_factory=dict)
    scripts: dict[str, Script] = field(default_factory=dict)
    regions: dict[str, Region] = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)
    id_index: dict[tuple[IdentifierType, str], str] = field(default_factory=dict)
    deprecations: dict[tuple[IdentifierType, str], DeprecationRecord] = field(default_factory=dict)
    build_meta: BuildMeta = field(default_factory=lambda: BuildMeta(format_version="1"))

    def node(self, internal_id: str):
        for table in (self.languoids, self.scripts, self.regions):
            if internal_id in table:
                return table[internal_id]
        return None

    def node_counts(self) -> dict[str, int]:
        return {
            "languoids": len(self.languoids),
            "scripts": len(self.scripts),
            "regions": len(self.regions),
            "edges": len(self.edges),
        }

    def validate(self) -> None:
        """Check every structural invariant; raise IntegrityError on the first failure."""
        node_kind: dict[str, str] = {}
        for table, kind in ((self.languoids, "languoid"), (self.scripts, "script"), (self.regions, "region")):
            for internal_id, node in table.items():
                if internal_id in node_kind:
                    raise IntegrityError(f"internal_id {internal_id!r} appears in more than one node table")
                node_kind[internal_id] = kind

        for languoid in self.languoids.values():
            for id_type, code in languoid.codes.items():
                if not validate_identifier(id_type, code):
                    raise IntegrityError(
                        f"languoid {languoid.internal_id}: code {code!r} is not valid {id_type.value}"
                    )
        for script in self.scripts.values():
            if not validate_identifier(IdentifierType.ISO15924, script.iso15924_code):
                raise IntegrityError(f"script {script.internal_id}: bad ISO 15924 code {script.iso15924_code!r}")
        for region in self.regions.values():
            for id_type, code in region.codes.items():
                if not validate_identifier(id_type, code):
                    raise IntegrityError(f"region {region.internal_id}: code {code!r} is not valid {id_type.value}")
            if region.region_kind is RegionKind.FORMER_COUNTRY and not region.historical:
                raise IntegrityError(f"region {region.internal_id}: former_country must be historical")
            if region.parent is not None and region.parent not in self.regions:
                raise IntegrityError(f"region {region.internal_id}: dangling parent {region.parent!r}")

        for key, internal_id in self.id_index.items():
            if internal_id not in node_kind:
                raise IntegrityError(f"id_index entry {key} points at unknown node {internal_id!r}")
            if key in self.deprecations:
                raise IntegrityError(f"deprecated code {key} must not appear in id_index")

        for edge in self.edges:
            expected = _EDGE_ENDPOINT_KINDS[edge.kind]
            actual = (node_kind.get(edge.src), node_kind.get(edge.dst))
            if actual[0] is None or actual[1] is None:
                raise IntegrityError(f"dangling edge {edge.kind.value}: {edge.src} -> {edge.dst}")
            if actual != expected:
                raise IntegrityError(
                    f"edge {edge.kind.value} connects {actual[0]} -> {actual[1]}, expected {expected[0]} -> {expected[1]}"
                )
