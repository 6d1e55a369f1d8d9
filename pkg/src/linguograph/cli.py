"""Command-line frontend.

Data goes to stdout in the requested format; deprecation notices and errors
go to stderr (as JSON lines when a machine format was requested, so stdout
stays parseable). Exit codes: 0 success, 1 not-found/ambiguity, 2 usage,
3 build/integrity/data errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from . import audit as audit_mod
from .core import IdentifierType, Languoid, Region, Script
from .errors import (
    AmbiguousCodeError,
    LinguographError,
    MissingTargetError,
    NamesUnavailableError,
    NotFoundError,
    TypeMismatchError,
)
from .pipeline import rebuild
from .resolve import DeprecationNotice, Resolver
from .store import load_database, load_names

ENV_DATABASE = "LINGUOGRAPH_DB"

# mirrors signals.DEFAULT_PERMUTATIONS without importing numpy on the lookup path
DEFAULT_PERMUTATIONS = 2000

_EXIT_LOOKUP = 1
_EXIT_USAGE = 2
_EXIT_BUILD = 3

_LOOKUP_ERRORS = (NotFoundError, AmbiguousCodeError, TypeMismatchError, MissingTargetError, NamesUnavailableError)


def packaged_database_path() -> Path:
    return Path(str(resources.files("linguograph").joinpath("data/linguograph.lgdb.gz")))


def packaged_registry_path() -> Path:
    return Path(str(resources.files("linguograph").joinpath("data/registry.cfg")))


def _names_path_for(db_path: Path) -> Path:
    name = db_path.name
    if name.endswith(".lgdb.gz"):
        return db_path.with_name(name[: -len(".lgdb.gz")] + ".lgnames.gz")
    return db_path.with_name(name + ".lgnames.gz")


class Output:
    """Stream discipline: requested format on stdout, diagnostics on stderr."""

    def __init__(self, fmt: str):
        self.fmt = fmt

    def data(self, payload) -> None:
        if self.fmt == "json":
            sys.stdout.write(json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
        else:
            sys.stdout.write(str(payload) if isinstance(payload, str) else json.dumps(payload, ensure_ascii=False))
            sys.stdout.write("\n")

    def text(self, line: str) -> None:
        sys.stdout.write(line + "\n")

    def notice(self, notice: DeprecationNotice) -> None:
        if self.fmt in ("json", "tsv"):
            sys.stderr.write(
                json.dumps(
                    {
                        "notice": {
                            "code": notice.code,
                            "id_type": notice.id_type.value,
                            "message": notice.message,
                            "replacements": list(notice.record.replacements),
                            "year": notice.record.year,
                        }
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )
        else:
            sys.stderr.write(f"warning: {notice.message}\n")

    def error(self, kind: str, message: str, **extra) -> None:
        if self.fmt in ("json", "tsv"):
            payload = {"error": {"kind": kind, "message": message, **extra}}
            sys.stderr.write(json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n")
        else:
            sys.stderr.write(f"error: {message}\n")
            for key, value in extra.items():
                sys.stderr.write(f"  {key}: {value}\n")


def node_summary(node) -> dict:
    if isinstance(node, Languoid):
        doc = {
            "kind": "languoid",
            "internal_id": node.internal_id,
            "name": node.reference_name,
            "level": node.level.value,
            "codes": {t.value: c for t, c in sorted(node.codes.items(), key=lambda kv: kv[0].value)},
            "flags": sorted(f.value for f in node.flags),
            "endonyms": list(node.endonyms),
        }
        if node.speaker_count is not None:
            doc["speaker_count"] = node.speaker_count
        return doc
    if isinstance(node, Script):
        return {
            "kind": "script",
            "internal_id": node.internal_id,
            "name": node.name,
            "codes": {"iso15924": node.iso15924_code},
            "aliases": list(node.aliases),
        }
    if isinstance(node, Region):
        return {
            "kind": "region",
            "internal_id": node.internal_id,
            "name": node.name,
            "region_kind": node.region_kind.value,
            "codes": {t.value: c for t, c in sorted(node.codes.items(), key=lambda kv: kv[0].value)},
            "historical": node.historical,
        }
    raise TypeError(f"not a node: {node!r}")


def _format_node_text(node) -> str:
    doc = node_summary(node)
    lines = [f"{doc['name']} ({doc['kind']}, {doc['internal_id']})"]
    if doc.get("level"):
        lines.append(f"  level: {doc['level']}")
    if doc.get("region_kind"):
        lines.append(f"  kind: {doc['region_kind']}" + (" (historical)" if doc.get("historical") else ""))
    for id_type, code in doc.get("codes", {}).items():
        lines.append(f"  {id_type}: {code}")
    if doc.get("endonyms"):
        lines.append("  endonyms: " + ", ".join(doc["endonyms"]))
    if doc.get("flags"):
        lines.append("  flags: " + ", ".join(doc["flags"]))
    if doc.get("speaker_count") is not None:
        lines.append(f"  speakers: {doc['speaker_count']}")
    return "\n".join(lines)


def _resolve_database_path(args) -> Path:
    if args.database:
        return Path(args.database)
    env = os.environ.get(ENV_DATABASE)
    if env:
        return Path(env)
    return packaged_database_path()


def _make_resolver(args, out: Output) -> Resolver:
    db_path = _resolve_database_path(args)
    db = load_database(db_path)
    names_path = Path(args.names) if getattr(args, "names", None) else _names_path_for(db_path)
    names = load_names(names_path, db) if names_path.exists() else None
    return Resolver(db, names=names, notice_sink=out.notice)


def _id_type(value: str) -> IdentifierType:
    try:
        return IdentifierType(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown identifier type {value!r}; one of: " + ", ".join(t.value for t in IdentifierType)
        )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_rebuild(args, out: Output) -> int:
    registry = Path(args.registry) if args.registry else packaged_registry_path()
    result = rebuild(
        registry_path=registry,
        cache_dir=Path(args.cache),
        output_path=Path(args.output),
        names_path=Path(args.names_output) if args.names_output else None,
    )
    if out.fmt == "json":
        out.data(result.report.to_json_dict())
    else:
        out.text(result.report.to_text().rstrip("\n"))
        out.text(f"database: {result.database_path} ({result.database_bytes} bytes)")
        out.text(f"names: {result.names_path} ({result.names_bytes} bytes)")
    return 0


def _cmd_get(args, out: Output) -> int:
    resolver = _make_resolver(args, out)
    if args.kind == "script":
        node = resolver.get_script(args.code)
    elif args.kind == "region":
        node = resolver.get_region(args.code)
    else:
        resolution = resolver.get_languoid(args.code)
        if resolution.node is None:
            record = resolution.deprecation
            candidates = [node_summary(n) for n in resolution.ambiguity]
            if candidates:
                out.error(
                    "ambiguous",
                    f"code {args.code!r} was split into {', '.join(record.replacements)}"
                    + (f" in {record.year}" if record and record.year else ""),
                    candidates=candidates,
                )
            else:
                out.error("not_found", f"code {args.code!r} is deprecated and has no successor in this database")
            return _EXIT_LOOKUP
        node = resolution.node
    if out.fmt == "json":
        out.data(node_summary(node))
    else:
        out.text(_format_node_text(node))
    return 0


def _cmd_convert(args, out: Output) -> int:
    resolver = _make_resolver(args, out)
    code = resolver.convert(args.code, args.from_type, args.to_type)
    out.data({"code": code} if out.fmt == "json" else code)
    return 0


def _cmd_normalize(args, out: Output) -> int:
    resolver = _make_resolver(args, out)
    code = resolver.normalize(args.code, args.to_type)
    out.data({"code": code} if out.fmt == "json" else code)
    return 0


def _cmd_search(args, out: Output) -> int:
    resolver = _make_resolver(args, out)
    results = resolver.search(args.query, limit=args.limit)
    if out.fmt == "json":
        out.data([{**node_summary(node), "score": score} for node, score in results])
    elif out.fmt == "tsv":
        for node, score in results:
            out.text(f"{node.reference_name}\t{node.kind}\t{node.internal_id}\t{score}")
    else:
        if not results:
            out.text("no matches")
        for node, score in results:
            out.text(f"{score}  {node.reference_name} ({node.kind}, {node.internal_id})")
    return 0


_RELATIONS = (
    "parents",
    "ancestors",
    "children",
    "family_root",
    "scripts",
    "regions",
    "co_script_languoids",
    "co_region_languoids",
)


def _cmd_neighbors(args, out: Output) -> int:
    resolver = _make_resolver(args, out)
    node = resolver.get(args.code)
    related = resolver.neighbors(node, args.relation)
    if out.fmt == "json":
        out.data([node_summary(n) for n in related])
    elif out.fmt == "tsv":
        for n in related:
            out.text(f"{n.reference_name}\t{n.kind}\t{n.internal_id}")
    else:
        if not related:
            out.text("none")
        for n in related:
            out.text(f"{n.reference_name} ({n.kind}, {n.internal_id})")
    return 0


def _read_audit_entries(path: str) -> list[tuple[str, str]]:
    if path == "-":
        text = sys.stdin.read()
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries = []
    for line in text.splitlines():
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) == 1:
            entries.append(("", parts[0].strip()))
        else:
            entries.append((parts[0].strip(), parts[1].strip()))
    return entries


def _cmd_audit(args, out: Output) -> int:
    resolver = _make_resolver(args, out)
    entries = _read_audit_entries(args.file)
    report = audit_mod.audit_codes(resolver, entries)
    if out.fmt == "json":
        out.data(report.to_json_dict())
    elif out.fmt == "tsv":
        for verdict in report.verdicts:
            out.text(
                "\t".join(
                    [
                        verdict.code,
                        verdict.category,
                        verdict.matched_type.value if verdict.matched_type else "",
                        ";".join(verdict.replacements),
                        verdict.note,
                    ]
                )
            )
    else:
        out.text(report.to_text().rstrip("\n"))
    return 0


def _table_cell(resolver: Resolver, languoid: Languoid, column: str) -> str:
    if column == "name":
        return languoid.reference_name
    if column == "level":
        return languoid.level.value
    if column == "family":
        roots = resolver.neighbors(languoid, "family_root")
        return "; ".join(r.reference_name for r in roots) if roots else ""
    if column == "scripts":
        return "; ".join(s.reference_name for s in resolver.neighbors(languoid, "scripts"))
    if column == "regions":
        return "; ".join(r.reference_name for r in resolver.neighbors(languoid, "regions"))
    if column == "endonyms":
        return "; ".join(languoid.endonyms)
    if column == "speaker_count":
        return str(languoid.speaker_count) if languoid.speaker_count is not None else ""
    if column == "flags":
        return "; ".join(sorted(f.value for f in languoid.flags))
    try:
        id_type = IdentifierType(column)
    except ValueError:
        raise NotFoundError(f"unknown table column {column!r}")
    return languoid.codes.get(id_type, "")


_LATEX_SPECIALS = {"&": r"\&", "%": r"\%", "#": r"\#", "_": r"\_", "$": r"\$"}


def _latex_escape(cell: str) -> str:
    for char, escaped in _LATEX_SPECIALS.items():
        cell = cell.replace(char, escaped)
    return cell


def _cmd_table(args, out: Output) -> int:
    resolver = _make_resolver(args, out)
    columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    if not columns:
        out.error("usage", "--columns must name at least one column")
        return _EXIT_USAGE
    rows = []
    for code in args.codes:
        languoid = resolver.get(code)
        rows.append([_table_cell(resolver, languoid, column) for column in columns])
    if out.fmt == "json":
        out.data([dict(zip(columns, row)) for row in rows])
    elif out.fmt == "latex":
        out.text(r"\begin{tabular}{" + "l" * len(columns) + "}")
        out.text(r"\toprule")
        out.text(" & ".join(_latex_escape(c) for c in columns) + r" \\")
        out.text(r"\midrule")
        for row in rows:
            out.text(" & ".join(_latex_escape(cell) if cell else "-" for cell in row) + r" \\")
        out.text(r"\bottomrule")
        out.text(r"\end{tabular}")
    elif out.fmt == "tsv":
        out.text("\t".join(columns))
        for row in rows:
            out.text("\t".join(row))
    else:
        widths = [max(len(columns[i]), *(len(r[i]) for r in rows)) if rows else len(columns[i]) for i in range(len(columns))]
        out.text("  ".join(c.ljust(widths[i]) for i, c in enumerate(columns)))
        for row in rows:
            out.text("  ".join((cell or "-").ljust(widths[i]) for i, cell in enumerate(row)))
    return 0


def _read_tsv_rows(path: str, n_columns: int, optional_extra: int = 0) -> list[tuple]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) < n_columns:
            continue
        rows.append(tuple(parts[: n_columns + optional_extra]))
    return rows


def _cmd_colex(args, out: Output) -> int:
    from . import signals as signals_mod  # numpy import deferred off the lookup path

    resolver = _make_resolver(args, out)

    def keyer(tag: str) -> tuple[str, str]:
        node = resolver.get(tag)
        return node.internal_id, node.reference_name

    rating_rows = []
    for row in _read_tsv_rows(args.ratings, 4, optional_extra=1):
        if len(row) >= 5 and row[4] and row[4] != args.dimension:
            continue
        try:
            value = float(row[3])
        except ValueError:
            continue  # header or junk row
        rating_rows.append((row[0], row[1], row[2], value))

    table = signals_mod.zscore_normalize(rating_rows, dimension=args.dimension)
    edge_rows = [row for row in _read_tsv_rows(args.edges, 3, optional_extra=1)]
    edge_rows = [(r[0], r[1], r[2], r[3] if len(r) > 3 else "") for r in edge_rows]
    problems: list[signals_mod.GraphBuildProblem] = []
    graph, sigs = signals_mod.build_concept_graph(edge_rows, table, args.dimension, keyer=keyer, problems=problems)
    for problem in problems:
        if out.fmt in ("json", "tsv"):
            sys.stderr.write(json.dumps({"notice": {"message": problem.message}}, sort_keys=True) + "\n")
        else:
            sys.stderr.write(f"warning: {problem.message}\n")

    if args.own_vs_other:
        rows = signals_mod.own_vs_other_analysis(graph, sigs, args.dimension)
        payload = [
            {
                "language": r.display_name,
                "n_own": r.n_own,
                "n_other": r.n_other,
                "mean_own": r.mean_own,
                "mean_other": r.mean_other,
                "u_statistic": r.u_statistic,
                "p_value": r.p_value,
                "cohens_d": r.cohens_d,
                "stars": r.stars,
                "note": r.note,
            }
            for r in rows
        ]
        if out.fmt == "json":
            out.data(payload)
        else:
            header = ["language", "n_own", "n_other", "mean_own", "mean_other", "U", "p", "d", ""]
            out.text("\t".join(header))
            for r in payload:
                out.text(
                    "\t".join(
                        [
                            r["language"],
                            str(r["n_own"]),
                            str(r["n_other"]),
                            _num(r["mean_own"]),
                            _num(r["mean_other"]),
                            _num(r["u_statistic"]),
                            _num(r["p_value"], 4),
                            _num(r["cohens_d"]),
                            r["stars"] or r["note"],
                        ]
                    )
                )
        return 0

    payload = []
    for key in sorted(sigs, key=lambda k: (sigs[k].display_name, k)):
        signal = sigs[key]
        result = signals_mod.permutation_pvalue(graph, signal, n_permutations=args.permutations, seed=args.seed)
        payload.append(
            {
                "language": signal.display_name,
                "n_rated": len(signal.values),
                "rayleigh": result.statistic,
                "p_value": result.p_value,
                "n_permutations": result.n_permutations,
                "stars": signals_mod.significance_stars(result.p_value),
            }
        )
    if out.fmt == "json":
        out.data({"dimension": args.dimension, "n_vertices": graph.n_vertices, "n_edges": graph.n_edges, "languages": payload})
    else:
        out.text(f"dimension: {args.dimension}  vertices: {graph.n_vertices}  edges: {graph.n_edges}")
        out.text("\t".join(["language", "n_rated", "R", "p", ""]))
        for row in payload:
            out.text(
                "\t".join(
                    [row["language"], str(row["n_rated"]), _num(row["rayleigh"]), _num(row["p_value"], 4), row["stars"]]
                )
            )
    return 0


def _num(value, digits: int = 3) -> str:
    if value is None:
        return ""
    return f"{value:.{digits}f}"


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linguograph", description="Language metadata graph toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, formats=("text", "json", "tsv")):
        p.add_argument("--database", "-d", help=f"database file (default: ${ENV_DATABASE} or the bundled database)")
        p.add_argument("--names", help="names file (default: database path with .lgnames.gz)")
        p.add_argument("--format", choices=formats, default="text")

    p = sub.add_parser("rebuild", help="fetch sources and rebuild the database")
    p.add_argument("--registry", help="source registry file (default: bundled fixture registry)")
    p.add_argument("--cache", default=str(Path.home() / ".cache" / "linguograph"), help="source cache directory")
    p.add_argument("--output", "-o", default="linguograph.lgdb.gz", help="database output path")
    p.add_argument("--names-output", help="names output path (default: derived from --output)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_rebuild)

    p = sub.add_parser("get", help="resolve a code to its canonical entity")
    p.add_argument("code")
    p.add_argument("--kind", choices=("languoid", "script", "region"), default="languoid")
    common(p)
    p.set_defaults(func=_cmd_get)

    p = sub.add_parser("convert", help="convert a code between identifier types")
    p.add_argument("code")
    p.add_argument("--from", dest="from_type", type=_id_type, required=True)
    p.add_argument("--to", dest="to_type", type=_id_type, required=True)
    common(p)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("normalize", help="resolve any code and project a target type")
    p.add_argument("code")
    p.add_argument("--to", dest="to_type", type=_id_type, required=True)
    common(p)
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("search", help="search names and endonyms")
    p.add_argument("query")
    p.add_argument("--limit", type=int, default=10)
    common(p)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("neighbors", help="traverse graph relations from a languoid")
    p.add_argument("code")
    p.add_argument("--relation", choices=_RELATIONS, required=True)
    common(p)
    p.set_defaults(func=_cmd_neighbors)

    p = sub.add_parser("audit", help="classify a code inventory (TSV: group<TAB>code, or one code per line)")
    p.add_argument("file", help="input path or - for stdin")
    common(p)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("table", help="emit a metadata table for the given codes")
    p.add_argument("codes", nargs="+")
    p.add_argument("--columns", default="name,iso639_3,glottocode")
    common(p, formats=("text", "json", "tsv", "latex"))
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("colex", help="colexification graph-signal statistics")
    p.add_argument("--edges", required=True, help="TSV: concept_a, concept_b, language_tag, lemma")
    p.add_argument("--ratings", required=True, help="TSV: dataset_id, language_tag, concept, raw_rating[, dimension]")
    p.add_argument("--dimension", required=True)
    p.add_argument("--own-vs-other", action="store_true")
    p.add_argument("--permutations", type=int, default=DEFAULT_PERMUTATIONS)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_colex)

    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    out = Output(getattr(args, "format", "text"))
    try:
        return args.func(args, out)
    except AmbiguousCodeError as exc:
        out.error("ambiguous", str(exc), candidates=[node_summary(n) for n in exc.candidates])
        return _EXIT_LOOKUP
    except _LOOKUP_ERRORS as exc:
        kind = {
            NotFoundError: "not_found",
            TypeMismatchError: "type_mismatch",
            MissingTargetError: "missing_target",
            NamesUnavailableError: "names_unavailable",
        }.get(type(exc), "not_found")
        extra = {}
        if isinstance(exc, NotFoundError) and exc.hint:
            extra["hint"] = exc.hint
        out.error(kind, str(exc), **extra)
        return _EXIT_LOOKUP
    except FileNotFoundError as exc:
        out.error("io", str(exc))
        return _EXIT_BUILD
    except LinguographError as exc:
        out.error(type(exc).__name__.replace("Error", "").lower(), str(exc))
        return _EXIT_BUILD


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
