"""End-to-end database build: fetch, parse, cluster, merge, assemble, write.

Given identical source files and policy, the pipeline is fully deterministic:
two runs produce byte-identical database files.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .core import BuildMeta, Database
from .errors import BuildError
from .ingest import (
    DEPRECATION_SOURCES,
    ParseProblem,
    SourceDescriptor,
    fetch_source,
    load_registry,
    parse_deprecations,
    parse_source,
)
from .merge import (
    DEFAULT_SOURCE_PRIORITY,
    FORMAT_VERSION,
    BuildReport,
    ManualOverride,
    ResolutionPolicy,
    assemble_database,
    build_report,
    build_timestamp,
    cluster_records,
    collect_names,
    merge_cluster,
)
from .store import serialize_database, serialize_names
from .core import IdentifierType


@dataclass
class RebuildResult:
    database: Database
    report: BuildReport
    database_path: Path
    names_path: Path
    database_bytes: int
    names_bytes: int


def load_policy(registry_path: Path) -> ResolutionPolicy:
    """Read the optional [policy] section of the registry file."""
    parser = configparser.ConfigParser()
    parser.read(registry_path)
    if not parser.has_section("policy"):
        return ResolutionPolicy()
    priority = parser.get("policy", "priority", fallback=None)
    overrides_raw = parser.get("policy", "overrides", fallback="")
    overrides = []
    for line in overrides_raw.splitlines():
        line = line.strip()
        if not line:
            continue
        # format: <id_type>:<code> <field> <value> [note...]
        selector, field_name, value, *note = line.split(None, 3)
        sel_type, _, sel_code = selector.partition(":")
        overrides.append(
            ManualOverride(
                selector_type=IdentifierType(sel_type),
                selector_code=sel_code,
                field=field_name,
                value=_coerce(value),
                note=note[0] if note else "",
            )
        )
    return ResolutionPolicy(
        source_priority=tuple(s.strip() for s in priority.split(",")) if priority else DEFAULT_SOURCE_PRIORITY,
        manual_overrides=tuple(overrides),
    )


def _coerce(value: str):
    if value in ("true", "false"):
        return value == "true"
    if value.isdigit():
        return int(value)
    return value


def rebuild(
    registry_path: Path,
    cache_dir: Path,
    output_path: Path,
    names_path: Optional[Path] = None,
    policy: Optional[ResolutionPolicy] = None,
    fetcher: Optional[Callable[[SourceDescriptor, Path], None]] = None,
) -> RebuildResult:
    """Fetch all registered sources and rebuild the database files."""
    registry_path = Path(registry_path)
    output_path = Path(output_path)
    if names_path is None:
        base = output_path.name
        for suffix in (".lgdb.gz", ".gz"):
            if base.endswith(suffix):
                base = base[: -len(suffix)]
                break
        names_path = output_path.with_name(base + ".lgnames.gz")

    descriptors = load_registry(registry_path)
    explicit_policy = policy is not None
    if policy is None:
        parser = configparser.ConfigParser()
        parser.read(registry_path)
        explicit_policy = parser.has_section("policy")
        policy = load_policy(registry_path)
    registry_ids = {d.source_id for d in descriptors}
    missing = [s for s in policy.source_priority if s not in registry_ids]
    if missing:
        if explicit_policy:
            raise BuildError(f"policy priority names unregistered sources: {missing}")
        # trim the built-in default to the sources this registry actually has
        policy = ResolutionPolicy(
            source_priority=tuple(s for s in policy.source_priority if s in registry_ids),
            manual_overrides=policy.manual_overrides,
        )

    problems: list[ParseProblem] = []
    warnings: list[str] = []
    records = []
    deprecations = []
    versions: dict[str, str] = {}
    for descriptor in descriptors:
        fetched = fetch_source(descriptor, Path(cache_dir), fetcher=fetcher)
        versions[descriptor.source_id] = fetched.version
        if descriptor.source_id in DEPRECATION_SOURCES:
            deprecations.extend(parse_deprecations(descriptor, list(fetched.files), problems))
        else:
            records.extend(parse_source(descriptor, list(fetched.files), problems))

    clusters = cluster_records(records)
    entities = []
    conflicts = []
    for cluster in clusters:
        entity, cluster_conflicts = merge_cluster(cluster, policy)
        entities.append(entity)
        conflicts.extend(cluster_conflicts)

    meta = BuildMeta(
        format_version=FORMAT_VERSION,
        source_versions=versions,
        build_timestamp=build_timestamp(),
    )
    deprecations.sort(key=lambda d: (d.id_type.value, d.code))
    db = assemble_database(entities, deprecations, meta, warnings)
    names_rows = collect_names(db, entities)

    db_bytes = serialize_database(db, output_path)
    names_bytes = serialize_names(names_rows, db, names_path)
    report = build_report(db, conflicts, problems, warnings)
    return RebuildResult(
        database=db,
        report=report,
        database_path=output_path,
        names_path=names_path,
        database_bytes=db_bytes,
        names_bytes=names_bytes,
    )
