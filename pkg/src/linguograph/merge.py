"""Entity clustering, conflict-resolved merging, and graph assembly.

Records that share any (identifier type, code) pair are one entity; shared
identifiers are the only linkage signal (no fuzzy name matching). Field
disagreements are resolved by manual override or source priority, and every
resolution is logged as a :class:`ConflictRecord` so nothing is silently
discarded.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
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
from .errors import BuildError
from .ingest import SET_VALUED_FIELDS, ParseProblem, RawRecord

#: Default source priority, earliest wins. Genealogy/levels favour the
#: dedicated languoid catalogue; region historicity favours the ISO tables.
DEFAULT_SOURCE_PRIORITY = (
    "glottolog",
    "iso_tables",
    "linguameta",
    "glotscript",
    "wikidata_map",
    "sil_deprecations",
    "iana_registry",
)

FORMAT_VERSION = "1.0"


@dataclass(frozen=True)
class ManualOverride:
    selector_type: IdentifierType
    selector_code: str
    field: str
    value: object
    note: str = ""


@dataclass(frozen=True)
class ResolutionPolicy:
    source_priority: tuple[str, ...] = DEFAULT_SOURCE_PRIORITY
    manual_overrides: tuple[ManualOverride, ...] = ()

    def rank(self, source_id: str) -> int:
        try:
            return self.source_priority.index(source_id)
        except ValueError:
            return len(self.source_priority)


@dataclass(frozen=True)
class ConflictRecord:
    entity_selector: str  # smallest identifier of the entity, "type:code"
    field: str
    contenders: tuple[tuple[str, str], ...]  # (source_id, repr(value))
    winner: str
    strategy: str  # "manual" | "priority"


@dataclass
class MergedEntity:
    entity_kind: str
    identifiers: dict[IdentifierType, str]
    attributes: dict
    provenance: set[str]
    selector: str


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------


def cluster_records(records: list[RawRecord]) -> list[list[RawRecord]]:
    """Group records into entities by transitive identifier sharing.

    Union-find over (type, code) keys; a key claimed by records of two
    different entity kinds is a build error naming both provenances.
    """
    parent = list(range(len(records)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    first_claim: dict[tuple[IdentifierType, str], int] = {}
    for i, record in enumerate(records):
        for key in record.identifiers.items():
            if key in first_claim:
                other = records[first_claim[key]]
                if other.entity_kind != record.entity_kind:
                    raise BuildError(
                        f"identifier {key[0].value}:{key[1]} claimed by a {other.entity_kind} "
                        f"({other.source_id}:{other.source_locator}) and a {record.entity_kind} "
                        f"({record.source_id}:{record.source_locator})"
                    )
                union(i, first_claim[key])
            else:
                first_claim[key] = i

    groups: dict[int, list[RawRecord]] = {}
    for i, record in enumerate(records):
        groups.setdefault(find(i), []).append(record)

    def smallest_identifier(cluster: list[RawRecord]) -> tuple[str, str]:
        return min((t.value, c) for r in cluster for t, c in r.identifiers.items())

    clusters = []
    for cluster in groups.values():
        cluster.sort(key=lambda r: (r.source_id, r.source_locator))
        clusters.append(cluster)
    clusters.sort(key=smallest_identifier)
    return clusters


# ---------------------------------------------------------------------------
# Merging
# ---------------------------------------------------------------------------


def _entity_selector(cluster: list[RawRecord]) -> str:
    t, c = min((t.value, c) for r in cluster for t, c in r.identifiers.items())
    return f"{t}:{c}"


def merge_cluster(cluster: list[RawRecord], policy: ResolutionPolicy) -> tuple[MergedEntity, list[ConflictRecord]]:
    """Merge one cluster field-by-field under the resolution policy.

    Set-valued fields are unioned in source-priority order; scalar fields
    with unequal contenders produce exactly one ConflictRecord each.
    """
    if not cluster:
        raise BuildError("cannot merge an empty cluster")
    kinds = {r.entity_kind for r in cluster}
    if len(kinds) != 1:
        raise BuildError(f"cluster mixes entity kinds {sorted(kinds)}")
    selector = _entity_selector(cluster)
    ordered = sorted(cluster, key=lambda r: (policy.rank(r.source_id), r.source_id, r.source_locator))

    overrides = {
        o.field: o
        for o in policy.manual_overrides
        if any(r.identifiers.get(o.selector_type) == o.selector_code for r in cluster)
    }

    # field name -> list of (source_id, value), priority-ordered
    contenders: dict[str, list[tuple[str, object]]] = {}
    for record in ordered:
        for id_type, code in record.identifiers.items():
            contenders.setdefault(f"code:{id_type.value}", []).append((record.source_id, code))
        for name, value in record.attributes.items():
            contenders.setdefault(name, []).append((record.source_id, value))

    conflicts: list[ConflictRecord] = []
    merged: dict[str, object] = {}

    for name, entries in contenders.items():
        if name in SET_VALUED_FIELDS:
            union: list = []
            for _, value in entries:
                for item in value:
                    if item not in union:
                        union.append(item)
            merged[name] = union
            continue
        values = [v for _, v in entries]
        distinct = []
        for v in values:
            if v not in distinct:
                distinct.append(v)
        override = overrides.get(name)
        if override is not None:
            if len(distinct) > 1 or distinct[0] != override.value:
                conflicts.append(
                    ConflictRecord(
                        entity_selector=selector,
                        field=name,
                        contenders=tuple((s, repr(v)) for s, v in entries),
                        winner=repr(override.value),
                        strategy="manual",
                    )
                )
            merged[name] = override.value
            continue
        if len(distinct) == 1:
            merged[name] = distinct[0]
            continue
        if all(policy.rank(s) >= len(policy.source_priority) for s, _ in entries):
            raise BuildError(
                f"unresolvable conflict on {selector} field {name!r}: no contender source in priority list "
                f"and no manual override ({entries})"
            )
        winner = entries[0][1]  # ordered by priority already
        merged[name] = winner
        conflicts.append(
            ConflictRecord(
                entity_selector=selector,
                field=name,
                contenders=tuple((s, repr(v)) for s, v in entries),
                winner=repr(winner),
                strategy="priority",
            )
        )

    identifiers: dict[IdentifierType, str] = {}
    attributes: dict = {}
    for name, value in merged.items():
        if name.startswith("code:"):
            identifiers[IdentifierType(name[5:])] = value
        else:
            attributes[name] = value
    entity = MergedEntity(
        entity_kind=cluster[0].entity_kind,
        identifiers=identifiers,
        attributes=attributes,
        provenance={r.source_id for r in cluster},
        selector=selector,
    )
    return entity, conflicts


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

_LANGUOID_ID_PREFERENCE = (
    IdentifierType.GLOTTOCODE,
    IdentifierType.ISO639_3,
    IdentifierType.ISO639_5,
    IdentifierType.ISO639_2B,
    IdentifierType.ISO639_1,
    IdentifierType.WIKIDATA_QID,
)

_REGION_ID_PREFERENCE = (
    IdentifierType.ISO3166_1_ALPHA2,
    IdentifierType.ISO3166_1_ALPHA3,
    IdentifierType.ISO3166_2,
    IdentifierType.ISO3166_3,
)

_FLAG_ATTRS = {"historical": Flag.HISTORICAL, "constructed": Flag.CONSTRUCTED, "unattested": Flag.UNATTESTED}


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def _preferred_id(identifiers: dict[IdentifierType, str], preference, prefix: str, fallback: str) -> str:
    for id_type in preference:
        if id_type in identifiers:
            return f"{prefix}{identifiers[id_type]}"
    if identifiers:
        _, code = min((t.value, c) for t, c in identifiers.items())
        return f"{prefix}{code}"
    return f"{prefix}{fallback}"


def _shortest_iso639(codes: dict[IdentifierType, str]) -> Optional[str]:
    # BCP-47 wants the shortest available ISO 639 code.
    return codes.get(IdentifierType.ISO639_1) or codes.get(IdentifierType.ISO639_3)


def build_timestamp() -> str:
    """Deterministic build timestamp: honours SOURCE_DATE_EPOCH, defaults to epoch.

    A wall-clock stamp would break byte-identical rebuilds, which outrank
    timestamp fidelity here.
    """
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def assemble_database(
    entities: list[MergedEntity],
    deprecations: list[DeprecationRecord],
    build_meta: BuildMeta,
    warnings: Optional[list[str]] = None,
) -> Database:
    """Materialize node tables, edges, and indexes from merged entities.

    Dangling references (unknown parent, unknown script, unresolvable
    deprecation replacement) warn and drop the edge; identifier-index
    collisions are build errors.
    """
    warnings = warnings if warnings is not None else []
    db = Database(build_meta=build_meta)
    deprecation_index = {(d.id_type, d.code): d for d in deprecations}

    def warn(message: str) -> None:
        warnings.append(message)

    def index(id_type: IdentifierType, code: str, internal_id: str, selector: str) -> None:
        key = (id_type, code)
        if key in deprecation_index:
            warn(f"{selector}: current code {id_type.value}:{code} is listed as deprecated; excluded from index")
            return
        existing = db.id_index.get(key)
        if existing is not None and existing != internal_id:
            raise BuildError(f"id_index collision on {id_type.value}:{code}: {existing} vs {internal_id}")
        db.id_index[key] = internal_id

    # -- scripts --
    for entity in entities:
        if entity.entity_kind != "script":
            continue
        code = entity.identifiers.get(IdentifierType.ISO15924)
        if code is None:
            warn(f"{entity.selector}: script entity without ISO 15924 code dropped")
            continue
        script = Script(
            iso15924_code=code,
            name=entity.attributes.get("name", code),
            numeric_code=entity.attributes.get("numeric_code"),
            aliases=tuple(entity.attributes.get("aliases", ())),
            source_provenance=frozenset(entity.provenance),
        )
        db.scripts[script.internal_id] = script
        index(IdentifierType.ISO15924, code, script.internal_id, entity.selector)

    # -- regions --
    region_entities = [e for e in entities if e.entity_kind == "region"]
    region_by_alpha2: dict[str, str] = {}
    for entity in region_entities:
        internal_id = _preferred_id(entity.identifiers, _REGION_ID_PREFERENCE, "reg-", _slug(entity.attributes.get("name", "x")))
        kind_attr = entity.attributes.get("kind")
        if kind_attr is None:
            if IdentifierType.ISO3166_2 in entity.identifiers:
                kind_attr = "subdivision"
            elif IdentifierType.ISO3166_3 in entity.identifiers and IdentifierType.ISO3166_1_ALPHA3 not in entity.identifiers:
                kind_attr = "former_country"
            else:
                kind_attr = "country"
        region = Region(
            internal_id=internal_id,
            name=entity.attributes.get("name", internal_id),
            region_kind=RegionKind(kind_attr),
            codes=dict(sorted(entity.identifiers.items(), key=lambda kv: kv[0].value)),
            historical=bool(entity.attributes.get("historical", False)),
            parent=None,  # filled after all regions exist
            source_provenance=frozenset(entity.provenance),
        )
        db.regions[internal_id] = region
        for id_type, code in region.codes.items():
            index(id_type, code, internal_id, entity.selector)
        if IdentifierType.ISO3166_1_ALPHA2 in entity.identifiers:
            region_by_alpha2[entity.identifiers[IdentifierType.ISO3166_1_ALPHA2]] = internal_id

    # Macro-areas come in as languoid attributes, not own records; they have
    # no ISO codes, so they are materialized here with empty code sets.
    macroareas = sorted(
        {e.attributes["macroarea"] for e in entities if e.entity_kind == "languoid" and e.attributes.get("macroarea")}
    )
    macroarea_ids: dict[str, str] = {}
    for name in macroareas:
        internal_id = f"reg-macro-{_slug(name)}"
        db.regions[internal_id] = Region(
            internal_id=internal_id,
            name=name,
            region_kind=RegionKind.MACROAREA,
            codes={},
            source_provenance=frozenset({"glottolog"}),
        )
        macroarea_ids[name] = internal_id

    edge_accumulator: dict[tuple[EdgeKind, str, str], set[str]] = {}

    def add_edge(kind: EdgeKind, src: str, dst: str, sources: set[str]) -> None:
        edge_accumulator.setdefault((kind, src, dst), set()).update(sources)

    # region containment
    for entity in region_entities:
        parent_code = entity.attributes.get("parent_region")
        if not parent_code:
            continue
        internal_id = _preferred_id(entity.identifiers, _REGION_ID_PREFERENCE, "reg-", "")
        parent_id = region_by_alpha2.get(parent_code)
        if parent_id is None:
            warn(f"{entity.selector}: parent region {parent_code!r} unknown; containment edge dropped")
            continue
        db.regions[internal_id] = replace(db.regions[internal_id], parent=parent_id)
        add_edge(EdgeKind.CONTAINED_IN, internal_id, parent_id, entity.provenance)

    # -- languoids --
    languoid_entities = [e for e in entities if e.entity_kind == "languoid"]
    for entity in languoid_entities:
        identifiers = dict(entity.identifiers)
        internal_id = _preferred_id(identifiers, _LANGUOID_ID_PREFERENCE, "lng-", _slug(entity.attributes.get("name", "x")))

        level_attr = entity.attributes.get("level", "language")
        try:
            level = Level(level_attr)
        except ValueError:
            warn(f"{entity.selector}: unknown level {level_attr!r}, defaulting to language")
            level = Level.LANGUAGE
        flags = {flag for attr, flag in _FLAG_ATTRS.items() if entity.attributes.get(attr)}
        if level is Level.MACROLANGUAGE:
            flags.add(Flag.MACROLANGUAGE)

        codes = {t: c for t, c in identifiers.items() if t not in (IdentifierType.BCP47, IdentifierType.LANG_SCRIPT)}
        if entity.attributes.get("in_iso639_2") and IdentifierType.ISO639_3 in codes:
            codes[IdentifierType.ISO639_2T] = codes[IdentifierType.ISO639_3]

        # Composite codes are derived from the merged parts; the first-listed
        # script (already priority-ordered by the merge) is the default.
        aliases: list[tuple[IdentifierType, str]] = []
        scripts_attr = [s for s in entity.attributes.get("scripts", []) if f"scr-{s}" in db.scripts]
        for s in entity.attributes.get("scripts", []):
            if f"scr-{s}" not in db.scripts:
                warn(f"{entity.selector}: unknown script {s!r}; ignored")
        default_script = scripts_attr[0] if scripts_attr else None
        if default_script and IdentifierType.ISO639_3 in codes:
            composed = f"{codes[IdentifierType.ISO639_3]}_{default_script}"
            provided = identifiers.get(IdentifierType.LANG_SCRIPT)
            if provided and provided != composed:
                warn(f"{entity.selector}: source lang_script {provided!r} differs from composed {composed!r}; keeping both in index")
                aliases.append((IdentifierType.LANG_SCRIPT, provided))
            codes[IdentifierType.LANG_SCRIPT] = composed
        if default_script and _shortest_iso639(codes):
            composed = f"{_shortest_iso639(codes)}_{default_script}"
            provided = identifiers.get(IdentifierType.BCP47)
            if provided and provided != composed:
                warn(f"{entity.selector}: source bcp47 {provided!r} differs from composed {composed!r}; keeping both in index")
                aliases.append((IdentifierType.BCP47, provided))
            codes[IdentifierType.BCP47] = composed

        languoid = Languoid(
            internal_id=internal_id,
            reference_name=entity.attributes.get("name", internal_id),
            level=level,
            codes=dict(sorted(codes.items(), key=lambda kv: kv[0].value)),
            endonyms=tuple(entity.attributes.get("endonyms", ())),
            flags=frozenset(flags),
            speaker_count=entity.attributes.get("speaker_count"),
            source_provenance=frozenset(entity.provenance),
        )
        db.languoids[internal_id] = languoid
        for id_type, code in languoid.codes.items():
            index(id_type, code, internal_id, entity.selector)
        for id_type, code in aliases:
            index(id_type, code, internal_id, entity.selector)

    # languoid edges need the full index, so a second pass
    for entity in languoid_entities:
        src = None
        for id_type, code in entity.identifiers.items():
            src = db.id_index.get((id_type, code))
            if src is not None:
                break
        if src is None:
            continue
        parent = entity.attributes.get("parent_glottocode")
        if parent:
            dst = db.id_index.get((IdentifierType.GLOTTOCODE, parent))
            if dst is None:
                warn(f"{entity.selector}: dangling parent glottocode {parent!r}; edge dropped")
            else:
                add_edge(EdgeKind.CHILD_OF, src, dst, entity.provenance)
        macro = entity.attributes.get("macrolanguage_of")
        if macro:
            dst = db.id_index.get((IdentifierType.ISO639_3, macro))
            if dst is None:
                warn(f"{entity.selector}: dangling macrolanguage {macro!r}; edge dropped")
            else:
                add_edge(EdgeKind.CHILD_OF, src, dst, entity.provenance)
        for script_code in entity.attributes.get("scripts", []):
            dst = f"scr-{script_code}"
            if dst in db.scripts:
                add_edge(EdgeKind.WRITTEN_IN, src, dst, entity.provenance)
        for region_code in entity.attributes.get("regions", []):
            dst = db.id_index.get((IdentifierType.ISO3166_1_ALPHA2, region_code)) or db.id_index.get(
                (IdentifierType.ISO3166_2, region_code)
            )
            if dst is None:
                warn(f"{entity.selector}: unknown region {region_code!r}; edge dropped")
            else:
                add_edge(EdgeKind.SPOKEN_IN, src, dst, entity.provenance)
        macroarea = entity.attributes.get("macroarea")
        if macroarea:
            add_edge(EdgeKind.SPOKEN_IN, src, macroarea_ids[macroarea], entity.provenance)

    # -- deprecations --
    for record in deprecations:
        key = (record.id_type, record.code)
        if key in db.deprecations:
            warn(f"duplicate deprecation for {record.id_type.value}:{record.code}; keeping first")
            continue
        db.deprecations[key] = record

    # Split and merge retirements dissolve an entity into successors; a stub
    # node anchors the replaced_by edges. Plain code renames (replace) and
    # replacement-less retirements need no graph presence.
    for record in deprecations:
        if record.change_kind not in (ChangeKind.SPLIT, ChangeKind.MERGE):
            continue
        targets = []
        for replacement in record.replacements:
            dst = db.id_index.get((record.id_type, replacement))
            if dst is None:
                warn(f"deprecation {record.code}: replacement {replacement!r} does not resolve; edge dropped")
            else:
                targets.append(dst)
        if not targets:
            continue
        stub_id = f"lng-retired-{record.code}"
        db.languoids[stub_id] = Languoid(
            internal_id=stub_id,
            reference_name=record.name or record.code,
            level=Level.LANGUAGE,
            codes={},
            flags=frozenset({Flag.HISTORICAL}),
            source_provenance=frozenset({record.source}),
            retired_code=record.code,
        )
        for dst in targets:
            add_edge(EdgeKind.REPLACED_BY, stub_id, dst, {record.source})

    db.edges = [
        Edge(kind=kind, src=src, dst=dst, sources=tuple(sorted(sources)))
        for (kind, src, dst), sources in sorted(edge_accumulator.items(), key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2]))
    ]
    db.validate()
    return db


def collect_names(db: Database, entities: list[MergedEntity]) -> list[dict]:
    """Build the names-table rows: reference names, endonyms, and
    cross-language names contributed by sources."""
    english = db.id_index.get((IdentifierType.ISO639_3, "eng"), "eng")

    def languoid_id(tag: str) -> str:
        for id_type in (IdentifierType.ISO639_3, IdentifierType.ISO639_1, IdentifierType.GLOTTOCODE):
            hit = db.id_index.get((id_type, tag))
            if hit is not None:
                return hit
        return tag

    rows: set[tuple[str, str, str, bool, str]] = set()
    for table in (db.languoids, db.scripts, db.regions):
        for node in table.values():
            rows.add((node.internal_id, english, node.reference_name, False, "merged"))
    for node in db.languoids.values():
        for endonym in node.endonyms:
            rows.add((node.internal_id, node.internal_id, endonym, True, "merged"))
    for entity in entities:
        if entity.entity_kind != "languoid":
            continue
        subject = None
        for id_type, code in entity.identifiers.items():
            subject = db.id_index.get((id_type, code))
            if subject is not None:
                break
        if subject is None:
            continue
        for tag, name in entity.attributes.get("names_in", []):
            rows.add((subject, languoid_id(tag), name, False, "wikidata_map"))
    return [
        {"subject": s, "in_language": lang, "name": name, "is_endonym": endo, "source_id": src}
        for s, lang, name, endo, src in sorted(rows, key=lambda r: (r[0], r[1], r[2], r[3], r[4]))
    ]


# ---------------------------------------------------------------------------
# Build report
# ---------------------------------------------------------------------------


@dataclass
class BuildReport:
    conflicts: list[ConflictRecord] = field(default_factory=list)
    problems: list[ParseProblem] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    totals: dict[str, int] = field(default_factory=dict)
    source_versions: dict[str, str] = field(default_factory=dict)

    def skip_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for problem in self.problems:
            counts[problem.source_id] = counts.get(problem.source_id, 0) + 1
        return counts

    def to_json_dict(self) -> dict:
        by_strategy: dict[str, list[dict]] = {}
        for c in self.conflicts:
            by_strategy.setdefault(c.strategy, []).append(
                {
                    "entity": c.entity_selector,
                    "field": c.field,
                    "contenders": [{"source": s, "value": v} for s, v in c.contenders],
                    "winner": c.winner,
                }
            )
        return {
            "conflicts": {k: by_strategy[k] for k in sorted(by_strategy)},
            "skipped_rows": dict(sorted(self.skip_counts().items())),
            "source_versions": dict(sorted(self.source_versions.items())),
            "totals": dict(sorted(self.totals.items())),
            "warnings": list(self.warnings),
        }

    def to_text(self) -> str:
        lines = ["build report", "============"]
        lines.append("totals: " + ", ".join(f"{k}={v}" for k, v in sorted(self.totals.items())))
        lines.append("sources:")
        for source, version in sorted(self.source_versions.items()):
            lines.append(f"  {source}: {version}")
        by_strategy: dict[str, list[ConflictRecord]] = {}
        for c in self.conflicts:
            by_strategy.setdefault(c.strategy, []).append(c)
        if by_strategy:
            lines.append("conflicts:")
            for strategy in sorted(by_strategy):
                records = by_strategy[strategy]
                lines.append(f"  {strategy}: {len(records)}")
                for c in records:
                    contenders = ", ".join(f"{s}={v}" for s, v in c.contenders)
                    lines.append(f"    {c.entity_selector} field={c.field} [{contenders}] -> {c.winner}")
        else:
            lines.append("conflicts: none")
        skip_counts = self.skip_counts()
        if skip_counts:
            lines.append("skipped rows:")
            for source, count in sorted(skip_counts.items()):
                lines.append(f"  {source}: {count}")
        for warning in self.warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines) + "\n"


def build_report(
    db: Database,
    conflicts: list[ConflictRecord],
    problems: list[ParseProblem],
    warnings: list[str],
) -> BuildReport:
    return BuildReport(
        conflicts=list(conflicts),
        problems=list(problems),
        warnings=list(warnings),
        totals=db.node_counts(),
        source_versions=dict(db.build_meta.source_versions),
    )
