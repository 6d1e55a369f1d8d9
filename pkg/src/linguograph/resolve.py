"""Query surface over a loaded database: resolution, conversion,
normalization, traversal, names, search, and predicate filtering.

All operations are reads over the immutable database, so one Resolver can be
shared freely between threads. Deprecation notices are returned as values and
additionally pushed into an injectable sink; there is no global state.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Union

from .core import (
    ChangeKind,
    Database,
    DeprecationRecord,
    EdgeKind,
    Flag,
    IdentifierType,
    LANGUOID_TYPES,
    Languoid,
    Level,
    Region,
    Script,
    validate_identifier,
)
from .errors import (
    AmbiguousCodeError,
    MissingTargetError,
    NamesUnavailableError,
    NotFoundError,
    TypeMismatchError,
)
from .store import NamesTable

Node = Union[Languoid, Script, Region]

#: Bare-code resolution order: longer / more specific standards first, so a
#: short string never shadows a more specific match. Region and script codes
#: are deliberately absent; they have their own accessors.
RESOLUTION_ORDER = (
    IdentifierType.GLOTTOCODE,
    IdentifierType.ISO639_3,
    IdentifierType.ISO639_2B,
    IdentifierType.ISO639_5,
    IdentifierType.ISO639_1,
    IdentifierType.WIKIDATA_QID,
    IdentifierType.LANG_SCRIPT,
    IdentifierType.BCP47,
)

_REGION_LOOKUP_ORDER = (
    IdentifierType.ISO3166_1_ALPHA2,
    IdentifierType.ISO3166_1_ALPHA3,
    IdentifierType.ISO3166_2,
    IdentifierType.ISO3166_3,
)


@dataclass(frozen=True)
class DeprecationNotice:
    code: str
    id_type: IdentifierType
    record: DeprecationRecord
    message: str


@dataclass(frozen=True)
class Resolution:
    node: Optional[Node]
    matched_type: Optional[IdentifierType] = None
    deprecation: Optional[DeprecationRecord] = None
    ambiguity: tuple[Languoid, ...] = ()


@dataclass(frozen=True)
class QuerySpec:
    """Conjunctive predicates over languoid attributes; empty spec matches all."""

    levels: Optional[frozenset[Level]] = None
    has_script: Optional[str] = None
    has_region: Optional[str] = None
    descendant_of: Optional[str] = None
    flags_all: frozenset[Flag] = frozenset()
    flags_none: frozenset[Flag] = frozenset()
    speaker_min: Optional[int] = None
    speaker_max: Optional[int] = None
    name_substring: Optional[str] = None


def fold(text: str) -> str:
    """Case- and diacritic-fold for search matching."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(c for c in decomposed if not unicodedata.combining(c)).casefold()


class Resolver:
    def __init__(
        self,
        db: Database,
        names: Optional[NamesTable] = None,
        notice_sink: Optional[Callable[[DeprecationNotice], None]] = None,
    ):
        self.db = db
        self.names = names
        self.notice_sink = notice_sink
        self._parents: dict[str, list[str]] = {}
        self._children: dict[str, list[str]] = {}
        self._scripts_of: dict[str, list[str]] = {}
        self._script_users: dict[str, list[str]] = {}
        self._regions_of: dict[str, list[str]] = {}
        self._region_users: dict[str, list[str]] = {}
        for edge in db.edges:
            if edge.kind is EdgeKind.CHILD_OF:
                self._parents.setdefault(edge.src, []).append(edge.dst)
                self._children.setdefault(edge.dst, []).append(edge.src)
            elif edge.kind is EdgeKind.WRITTEN_IN:
                self._scripts_of.setdefault(edge.src, []).append(edge.dst)
                self._script_users.setdefault(edge.dst, []).append(edge.src)
            elif edge.kind is EdgeKind.SPOKEN_IN:
                self._regions_of.setdefault(edge.src, []).append(edge.dst)
                self._region_users.setdefault(edge.dst, []).append(edge.src)
        self._search_space: Optional[list[tuple[str, int, Node]]] = None

    # -- notices -----------------------------------------------------------

    def _notify(self, code: str, id_type: IdentifierType, record: DeprecationRecord) -> None:
        if self.notice_sink is None:
            return
        if record.replacements:
            detail = f"replaced by {', '.join(record.replacements)}"
        else:
            detail = "retired without replacement"
        if record.year is not None:
            detail += f" in {record.year}"
        self.notice_sink(
            DeprecationNotice(
                code=code,
                id_type=id_type,
                record=record,
                message=f"code {code!r} ({id_type.value}) is deprecated: {detail}",
            )
        )

    # -- core resolution ----------------------------------------------------

    def _follow_deprecation(self, code: str, id_type: IdentifierType, record: DeprecationRecord) -> Resolution:
        self._notify(code, id_type, record)
        if record.change_kind is ChangeKind.SPLIT or len(record.replacements) > 1:
            candidates = []
            for replacement in record.replacements:
                hit = self.db.id_index.get((id_type, replacement))
                if hit is not None:
                    candidates.append(self.db.languoids[hit])
            candidates.sort(key=lambda n: (n.reference_name, n.internal_id))
            return Resolution(node=None, matched_type=id_type, deprecation=record, ambiguity=tuple(candidates))
        # single replacement: follow the chain to a current code
        current = record
        seen = {code}
        while current.replacements:
            replacement = current.replacements[0]
            hit = self.db.id_index.get((id_type, replacement))
            if hit is not None:
                return Resolution(node=self.db.languoids[hit], matched_type=id_type, deprecation=record)
            nxt = self.db.deprecations.get((id_type, replacement))
            if nxt is None or replacement in seen:
                break
            seen.add(replacement)
            current = nxt
        return Resolution(node=None, matched_type=id_type, deprecation=record)

    def _composite_halves(self, code: str, id_type: IdentifierType) -> Optional[Languoid]:
        """Resolve a lang_script / bcp47 code by its halves when the composed
        form is not indexed (e.g. a non-default script)."""
        lang, _, script = code.partition("_")
        if not script or f"scr-{script}" not in self.db.scripts:
            return None
        if id_type is IdentifierType.LANG_SCRIPT:
            lang_types = (IdentifierType.ISO639_3,)
        else:
            lang_types = (IdentifierType.ISO639_1, IdentifierType.ISO639_3)
        for lang_type in lang_types:
            hit = self.db.id_index.get((lang_type, lang))
            if hit is not None:
                return self.db.languoids[hit]
        return None

    def get_languoid(self, code: str) -> Resolution:
        """Resolve a bare code against the languoid standards.

        Deprecated codes with a single replacement resolve to the replacement
        (with a notice); split deprecations produce an ambiguity list.
        """
        tried = []
        for id_type in RESOLUTION_ORDER:
            if not validate_identifier(id_type, code):
                continue
            tried.append(id_type.value)
            hit = self.db.id_index.get((id_type, code))
            if hit is not None:
                return Resolution(node=self.db.languoids[hit], matched_type=id_type)
            record = self.db.deprecations.get((id_type, code))
            if record is not None:
                return self._follow_deprecation(code, id_type, record)
            if id_type in (IdentifierType.LANG_SCRIPT, IdentifierType.BCP47):
                node = self._composite_halves(code, id_type)
                if node is not None:
                    return Resolution(node=node, matched_type=id_type)
        if tried:
            raise NotFoundError(f"code {code!r} not found (tried as {', '.join(tried)})")
        raise NotFoundError(f"code {code!r} matches no languoid identifier syntax")

    def get(self, code: str) -> Languoid:
        """Resolve a code, raising on splits and replacement-less retirements."""
        resolution = self.get_languoid(code)
        if resolution.node is not None:
            return resolution.node
        record = resolution.deprecation
        if resolution.ambiguity:
            raise AmbiguousCodeError(
                f"code {code!r} was split into {', '.join(record.replacements)}"
                + (f" in {record.year}" if record and record.year else ""),
                candidates=resolution.ambiguity,
                deprecation=record,
            )
        raise NotFoundError(f"code {code!r} is deprecated and its replacements are not in this database")

    def get_script(self, code: str) -> Script:
        hit = self.db.id_index.get((IdentifierType.ISO15924, code))
        if hit is not None:
            return self.db.scripts[hit]
        hint = None
        if any(validate_identifier(t, code) for t in LANGUOID_TYPES):
            hint = f"{code!r} looks like a language code; use the languoid accessor"
        raise NotFoundError(f"script code {code!r} not found", hint=hint)

    def get_region(self, code: str) -> Region:
        for id_type in _REGION_LOOKUP_ORDER:
            hit = self.db.id_index.get((id_type, code))
            if hit is not None:
                return self.db.regions[hit]
        hint = None
        if any(validate_identifier(t, code) for t in LANGUOID_TYPES):
            hint = f"{code!r} looks like a language code; use the languoid accessor"
        raise NotFoundError(f"region code {code!r} not found", hint=hint)

    # -- conversion ---------------------------------------------------------

    def code_of(self, languoid: Languoid, target: IdentifierType) -> str:
        """The languoid's code of ``target`` type; composites are composed
        from the ISO 639 part plus the default script."""
        if target not in LANGUOID_TYPES:
            raise TypeMismatchError(f"{target.value} is not a languoid identifier type")
        code = languoid.codes.get(target)
        if code is not None:
            return code
        raise MissingTargetError(
            f"{languoid.reference_name} ({languoid.internal_id}) has no {target.value} code"
        )

    def convert(self, code: str, from_type: IdentifierType, to_type: IdentifierType) -> str:
        """Typed conversion: ``code`` must belong to ``from_type`` specifically."""
        if from_type not in LANGUOID_TYPES:
            raise TypeMismatchError(f"{from_type.value} is not a languoid identifier type")
        if not validate_identifier(from_type, code):
            raise TypeMismatchError(f"{code!r} is not syntactically a {from_type.value} code")
        hit = self.db.id_index.get((from_type, code))
        if hit is not None:
            return self.code_of(self.db.languoids[hit], to_type)
        record = self.db.deprecations.get((from_type, code))
        if record is not None:
            resolution = self._follow_deprecation(code, from_type, record)
            if resolution.ambiguity:
                raise AmbiguousCodeError(
                    f"code {code!r} was split into {', '.join(record.replacements)}",
                    candidates=resolution.ambiguity,
                    deprecation=record,
                )
            if resolution.node is None:
                raise NotFoundError(f"code {code!r} is deprecated and its replacements are not in this database")
            return self.code_of(resolution.node, to_type)
        for other in sorted(LANGUOID_TYPES, key=lambda t: (RESOLUTION_ORDER.index(t) if t in RESOLUTION_ORDER else 99, t.value)):
            if other is not from_type and self.db.id_index.get((other, code)) is not None:
                raise TypeMismatchError(f"code {code!r} exists, but as {other.value}, not {from_type.value}")
        raise NotFoundError(f"code {code!r} not found under {from_type.value}")

    def normalize(self, code: str, to_type: IdentifierType) -> str:
        """Resolve ``code`` to its canonical languoid, then project ``to_type``."""
        resolution = self.get_languoid(code)
        if resolution.node is None:
            record = resolution.deprecation
            if resolution.ambiguity:
                raise AmbiguousCodeError(
                    f"code {code!r} was split into {', '.join(record.replacements)}; give one successor",
                    candidates=resolution.ambiguity,
                    deprecation=record,
                )
            raise NotFoundError(f"code {code!r} is deprecated and its replacements are not in this database")
        return self.code_of(resolution.node, to_type)

    # -- traversal ----------------------------------------------------------

    def _by_name(self, ids) -> list[Node]:
        nodes = [self.db.node(i) for i in ids]
        return sorted(nodes, key=lambda n: (n.reference_name, n.internal_id))

    def _ancestor_ids(self, node_id: str) -> list[str]:
        # BFS up the genealogy; near ancestors first, root last.
        out: list[str] = []
        frontier = [node_id]
        seen = {node_id}
        while frontier:
            level: list[str] = []
            for nid in frontier:
                for parent in sorted(self._parents.get(nid, ())):
                    if parent not in seen:
                        seen.add(parent)
                        level.append(parent)
            out.extend(level)
            frontier = level
        return out

    def neighbors(self, node: Node, relation: str) -> list[Node]:
        """Traverse one of the fixed relations from ``node``.

        ``ancestors`` is ordered nearest-first (the family root comes last);
        every other relation is ordered by reference name.
        """
        nid = node.internal_id
        if relation == "parents":
            return self._by_name(self._parents.get(nid, ()))
        if relation == "children":
            return self._by_name(self._children.get(nid, ()))
        if relation == "ancestors":
            return [self.db.node(i) for i in self._ancestor_ids(nid)]
        if relation == "family_root":
            ancestors = self._ancestor_ids(nid)
            return self._by_name([a for a in ancestors if not self._parents.get(a)])
        if relation == "scripts":
            return self._by_name(self._scripts_of.get(nid, ()))
        if relation == "regions":
            return self._by_name(self._regions_of.get(nid, ()))
        if relation == "co_script_languoids":
            peers = {u for s in self._scripts_of.get(nid, ()) for u in self._script_users.get(s, ())}
            peers.discard(nid)
            return self._by_name(peers)
        if relation == "co_region_languoids":
            peers = {u for r in self._regions_of.get(nid, ()) for u in self._region_users.get(r, ())}
            peers.discard(nid)
            return self._by_name(peers)
        raise ValueError(f"unknown relation {relation!r}")

    # -- names ----------------------------------------------------------------

    def name_of(self, subject: Node, in_language: str) -> list[str]:
        """Names of ``subject`` in the language the given code resolves to."""
        if self.names is None:
            raise NamesUnavailableError("no names table attached to this resolver")
        target = self.get(in_language)
        return self.names.names_for(subject.internal_id, target.internal_id)

    # -- search ---------------------------------------------------------------

    def _build_search_space(self) -> list[tuple[str, int, Node]]:
        if self._search_space is None:
            space = []
            for table in (self.db.languoids, self.db.scripts, self.db.regions):
                for node in table.values():
                    space.append((fold(node.reference_name), 0, node))
                    if isinstance(node, Languoid):
                        for endonym in node.endonyms:
                            space.append((fold(endonym), 1, node))
            self._search_space = space
        return self._search_space

    def search(self, query: str, limit: int = 10) -> list[tuple[Node, int]]:
        """Rank nodes by name match: exact (3) > prefix (2) > substring (1)."""
        needle = fold(query)
        if not needle or limit <= 0:
            return []
        best: dict[str, tuple[int, Node]] = {}
        for haystack, _, node in self._build_search_space():
            if haystack == needle:
                score = 3
            elif haystack.startswith(needle):
                score = 2
            elif needle in haystack:
                score = 1
            else:
                continue
            held = best.get(node.internal_id)
            if held is None or score > held[0]:
                best[node.internal_id] = (score, node)
        ranked = sorted(best.values(), key=lambda sn: (-sn[0], sn[1].reference_name, sn[1].internal_id))
        return [(node, score) for score, node in ranked[:limit]]

    # -- predicate queries ------------------------------------------------------

    def filter_languoids(self, spec: QuerySpec) -> Iterator[Languoid]:
        """Lazily iterate languoids matching every predicate in ``spec``.

        Codes referenced by the query spec are resolved now, so an
        unresolvable predicate fails before iteration starts.
        """
        script_id = None
        if spec.has_script is not None:
            script_id = self.get_script(spec.has_script).internal_id
        region_id = None
        if spec.has_region is not None:
            region_id = self.get_region(spec.has_region).internal_id
        descendant_pool = None
        if spec.descendant_of is not None:
            root = self.get(spec.descendant_of)
            descendant_pool = set()
            frontier = [root.internal_id]
            while frontier:
                nxt = []
                for nid in frontier:
                    for child in self._children.get(nid, ()):
                        if child not in descendant_pool:
                            descendant_pool.add(child)
                            nxt.append(child)
                frontier = nxt
        name_needle = fold(spec.name_substring) if spec.name_substring is not None else None

        def matches(languoid: Languoid) -> bool:
            if spec.levels is not None and languoid.level not in spec.levels:
                return False
            if script_id is not None and script_id not in self._scripts_of.get(languoid.internal_id, ()):
                return False
            if region_id is not None and region_id not in self._regions_of.get(languoid.internal_id, ()):
                return False
            if descendant_pool is not None and languoid.internal_id not in descendant_pool:
                return False
            if spec.flags_all and not spec.flags_all <= languoid.flags:
                return False
            if spec.flags_none and spec.flags_none & languoid.flags:
                return False
            if spec.speaker_min is not None and (languoid.speaker_count is None or languoid.speaker_count < spec.speaker_min):
                return False
            if spec.speaker_max is not None and (languoid.speaker_count is None or languoid.speaker_count > spec.speaker_max):
                return False
            if name_needle is not None and name_needle not in fold(languoid.reference_name):
                return False
            return True

        ordered = sorted(self.db.languoids.values(), key=lambda n: (n.reference_name, n.internal_id))
        return (languoid for languoid in ordered if matches(languoid))
