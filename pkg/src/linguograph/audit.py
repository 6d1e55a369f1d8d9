"""Classification of language-code inventories into valid / deprecated /
region-code / unknown, with per-group aggregation.

The region check is case-insensitive (uppercase and sloppy lowercase tags
both count), while two-letter languoid codes stay lowercase-only, so ``de``
is German but ``DE`` is Germany.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import IdentifierType
from .errors import NotFoundError
from .resolve import Resolver

CATEGORIES = ("valid", "deprecated", "region_code", "unknown")


@dataclass(frozen=True)
class CodeVerdict:
    code: str
    category: str
    matched_type: Optional[IdentifierType] = None
    replacements: tuple[str, ...] = ()
    note: str = ""


@dataclass
class AuditReport:
    verdicts: list[CodeVerdict] = field(default_factory=list)
    category_counts: dict[str, int] = field(default_factory=dict)
    type_counts: dict[str, int] = field(default_factory=dict)
    group_breakdown: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "category_counts": {c: self.category_counts.get(c, 0) for c in CATEGORIES},
            "identifier_type_counts": dict(sorted(self.type_counts.items())),
            "groups": {g: dict(sorted(counts.items())) for g, counts in sorted(self.group_breakdown.items())},
            "verdicts": [
                {
                    "code": v.code,
                    "category": v.category,
                    "matched_type": v.matched_type.value if v.matched_type else None,
                    "replacements": list(v.replacements),
                    "note": v.note,
                }
                for v in self.verdicts
            ],
        }

    def to_text(self) -> str:
        lines = ["audit report", "============"]
        total = sum(self.category_counts.values())
        lines.append(f"unique codes: {total}")
        for category in CATEGORIES:
            lines.append(f"  {category}: {self.category_counts.get(category, 0)}")
        if self.type_counts:
            lines.append("identifier types among valid codes:")
            for id_type, count in sorted(self.type_counts.items(), key=lambda kv: (-kv[1], kv[0])):
                lines.append(f"  {id_type}: {count}")
        flagged = [v for v in self.verdicts if v.category != "valid"]
        if flagged:
            lines.append("flagged codes:")
            for v in flagged:
                detail = f" -> {', '.join(v.replacements)}" if v.replacements else ""
                note = f" ({v.note})" if v.note else ""
                lines.append(f"  {v.code}: {v.category}{detail}{note}")
        if self.group_breakdown:
            lines.append("per-group breakdown:")
            for group, counts in sorted(self.group_breakdown.items()):
                summary = ", ".join(f"{c}={counts[c]}" for c in CATEGORIES if counts.get(c))
                lines.append(f"  {group}: {summary}")
        return "\n".join(lines) + "\n"


def _region_hit(resolver: Resolver, code: str):
    for candidate in (code, code.upper()):
        try:
            return resolver.get_region(candidate)
        except NotFoundError:
            continue
    return None


def classify_code(resolver: Resolver, code: str) -> CodeVerdict:
    """Classify one code. Total: every input gets exactly one category.

    Decision order: current languoid code, then deprecated languoid code,
    then region code (case-folded), otherwise unknown. A code that is both
    a deprecated languoid code and a region code keeps the deprecated
    verdict, with the collision noted.
    """
    try:
        resolution = resolver.get_languoid(code)
    except NotFoundError:
        resolution = None
    if resolution is not None and resolution.deprecation is None and resolution.node is not None:
        return CodeVerdict(code=code, category="valid", matched_type=resolution.matched_type)
    if resolution is not None and resolution.deprecation is not None:
        record = resolution.deprecation
        note = f"{record.change_kind.value}" + (f" in {record.year}" if record.year else "")
        if _region_hit(resolver, code) is not None:
            note += "; also matches a region code"
        return CodeVerdict(
            code=code,
            category="deprecated",
            matched_type=record.id_type,
            replacements=record.replacements,
            note=note,
        )
    region = _region_hit(resolver, code)
    if region is not None:
        return CodeVerdict(code=code, category="region_code", note=region.name)
    return CodeVerdict(code=code, category="unknown")


def audit_codes(resolver: Resolver, entries: Iterable[tuple[str, str]]) -> AuditReport:
    """Audit (group id, code) pairs.

    Each unique code is classified once and counted once in the totals;
    the per-group breakdown counts every occurrence within its group.
    """
    report = AuditReport()
    verdict_by_code: dict[str, CodeVerdict] = {}
    for group, code in entries:
        if code not in verdict_by_code:
            verdict_by_code[code] = classify_code(resolver, code)
        verdict = verdict_by_code[code]
        if group:
            per_group = report.group_breakdown.setdefault(group, {})
            per_group[verdict.category] = per_group.get(verdict.category, 0) + 1
    report.verdicts = [verdict_by_code[c] for c in sorted(verdict_by_code)]
    for verdict in report.verdicts:
        report.category_counts[verdict.category] = report.category_counts.get(verdict.category, 0) + 1
        if verdict.category == "valid" and verdict.matched_type is not None:
            key = verdict.matched_type.value
            report.type_counts[key] = report.type_counts.get(key, 0) + 1
    return report
