import json
from pathlib import Path

import pytest

from linguograph.core import ChangeKind, IdentifierType
from linguograph.errors import FetchError, FormatError, IntegrityError
from linguograph.ingest import (
    ParseProblem,
    RawRecord,
    SourceDescriptor,
    fetch_source,
    load_registry,
    parse_deprecations,
    parse_source,
)

FIXTURE_SOURCES = Path(__file__).resolve().parents[1] / "src" / "linguograph" / "data" / "sources"


def _descriptor(source_id, locator, layout):
    return SourceDescriptor(source_id=source_id, locator=str(locator), expected_layout=layout)


class TestFetch:
    def test_first_fetch_then_cache_hit(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "data.csv").write_text("x\n")
        d = _descriptor("iso_tables", src, "csv")
        first = fetch_source(d, tmp_path / "cache")
        assert first.refreshed is True
        second = fetch_source(d, tmp_path / "cache")
        assert second.refreshed is False
        assert [f.name for f in second.files] == ["data.csv"]
        meta = (tmp_path / "cache" / "iso_tables" / "meta").read_text().splitlines()
        assert len(meta) == 2  # version, checksum

    def test_version_file_bump_refreshes(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "data.csv").write_text("x\n")
        (src / "VERSION").write_text("1.0\n")
        d = _descriptor("iso_tables", src, "csv")
        assert fetch_source(d, tmp_path / "cache").version == "1.0"
        (src / "VERSION").write_text("2.0\n")
        result = fetch_source(d, tmp_path / "cache")
        assert result.refreshed is True
        assert result.version == "2.0"

    def test_unreachable_without_cache_raises(self, tmp_path):
        d = _descriptor("linguameta", tmp_path / "missing", "json_per_language")
        with pytest.raises(FetchError, match="linguameta"):
            fetch_source(d, tmp_path / "cache")

    def test_unreachable_with_cache_falls_back(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "a.json").write_text("{}")
        d = _descriptor("linguameta", src, "json_per_language")
        fetch_source(d, tmp_path / "cache")
        (src / "a.json").unlink()
        src.rmdir()
        result = fetch_source(d, tmp_path / "cache")
        assert result.refreshed is False
        assert [f.name for f in result.files] == ["a.json"]

    def test_pinned_checksum_mismatch(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "data.csv").write_text("x\n")
        d = SourceDescriptor("iso_tables", str(src), "csv", pinned_version="0" * 64)
        with pytest.raises(IntegrityError, match="checksum"):
            fetch_source(d, tmp_path / "cache")

    def test_idempotent_fetch_does_not_rewrite(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "data.csv").write_text("x\n")
        d = _descriptor("iso_tables", src, "csv")
        first = fetch_source(d, tmp_path / "cache")
        stamp = first.files[0].stat().st_mtime_ns
        fetch_source(d, tmp_path / "cache")
        assert first.files[0].stat().st_mtime_ns == stamp


class TestRegistry:
    def test_load_packaged_style_registry(self, tmp_path):
        registry = tmp_path / "registry.cfg"
        registry.write_text("[glottolog]\nlocator = sources/glottolog\nlayout = cldf_csv\n")
        descriptors = load_registry(registry)
        assert descriptors[0].source_id == "glottolog"
        assert descriptors[0].locator == str(tmp_path / "sources" / "glottolog")

    def test_missing_registry(self, tmp_path):
        with pytest.raises(FetchError):
            load_registry(tmp_path / "nope.cfg")


class TestParseLinguameta:
    def test_german_record(self):
        d = _descriptor("linguameta", FIXTURE_SOURCES / "linguameta", "json_per_language")
        records = parse_source(d, sorted((FIXTURE_SOURCES / "linguameta").glob("*.json")))
        german = next(r for r in records if r.identifiers.get(IdentifierType.ISO639_3) == "deu")
        assert german.entity_kind == "languoid"
        assert german.identifiers[IdentifierType.BCP47] == "de_Latn"
        assert german.attributes["name"] == "German"
        assert german.attributes["endonyms"] == ["Deutsch"]
        assert german.source_locator == "de.json"

    def test_region_subrecords_carry_historical(self):
        d = _descriptor("linguameta", FIXTURE_SOURCES / "linguameta", "json_per_language")
        records = parse_source(d, sorted((FIXTURE_SOURCES / "linguameta").glob("*.json")))
        an = next(
            r
            for r in records
            if r.entity_kind == "region" and r.identifiers.get(IdentifierType.ISO3166_1_ALPHA2) == "AN"
        )
        assert an.attributes["historical"] is False
        assert an.attributes["name"] == "Netherlands Antilles"

    def test_malformed_file_skipped_and_reported(self, tmp_path):
        (tmp_path / "ok.json").write_text('{"name": "X", "iso639_3": "xxx"}')
        (tmp_path / "broken.json").write_text("{nope")
        problems: list[ParseProblem] = []
        records = parse_source(_descriptor("linguameta", tmp_path, "json_per_language"),
                               sorted(tmp_path.glob("*.json")), problems)
        assert len(records) == 1
        assert len(problems) == 1
        assert problems[0].source_locator == "broken.json"

    def test_parse_determinism(self):
        d = _descriptor("linguameta", FIXTURE_SOURCES / "linguameta", "json_per_language")
        files = sorted((FIXTURE_SOURCES / "linguameta").glob("*.json"))
        assert parse_source(d, files) == parse_source(d, files)


class TestParseGlottolog:
    def test_language_row_and_family_row(self):
        d = _descriptor("glottolog", FIXTURE_SOURCES / "glottolog", "cldf_csv")
        records = parse_source(d, list((FIXTURE_SOURCES / "glottolog").iterdir()))
        german = next(r for r in records if r.identifiers.get(IdentifierType.GLOTTOCODE) == "stan1295")
        assert german.attributes["level"] == "language"
        assert german.attributes["parent_glottocode"] == "germ1287"
        assert german.identifiers[IdentifierType.ISO639_3] == "deu"
        family = next(r for r in records if r.identifiers.get(IdentifierType.GLOTTOCODE) == "germ1287")
        assert family.attributes["level"] == "family"

    def test_missing_table_is_format_error(self, tmp_path):
        (tmp_path / "other.csv").write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            parse_source(_descriptor("glottolog", tmp_path, "cldf_csv"), list(tmp_path.iterdir()))


class TestParseIsoTables:
    def test_an_row_is_historical_former_country(self):
        d = _descriptor("iso_tables", FIXTURE_SOURCES / "iso_tables", "csv")
        records = parse_source(d, list((FIXTURE_SOURCES / "iso_tables").iterdir()))
        an = next(r for r in records if r.identifiers.get(IdentifierType.ISO3166_3) == "ANHH")
        assert an.entity_kind == "region"
        assert an.attributes["historical"] is True
        assert an.attributes["kind"] == "former_country"
        assert an.identifiers[IdentifierType.ISO3166_1_ALPHA2] == "AN"

    def test_iso639_2_keeps_terminological_as_639_3(self):
        d = _descriptor("iso_tables", FIXTURE_SOURCES / "iso_tables", "csv")
        records = parse_source(d, list((FIXTURE_SOURCES / "iso_tables").iterdir()))
        german = next(r for r in records if r.identifiers.get(IdentifierType.ISO639_2B) == "ger")
        assert german.identifiers[IdentifierType.ISO639_3] == "deu"
        assert german.attributes["in_iso639_2"] is True
        assert IdentifierType.ISO639_2T not in german.identifiers

    def test_macrolanguage_scope_and_membership(self):
        d = _descriptor("iso_tables", FIXTURE_SOURCES / "iso_tables", "csv")
        records = parse_source(d, list((FIXTURE_SOURCES / "iso_tables").iterdir()))
        nor = next(r for r in records if r.identifiers.get(IdentifierType.ISO639_3) == "nor"
                   and r.source_locator.startswith("iso639_3.csv"))
        assert nor.attributes["level"] == "macrolanguage"
        nno = next(r for r in records if r.identifiers.get(IdentifierType.ISO639_3) == "nno"
                   and r.source_locator.startswith("iso639_3.csv"))
        assert nno.attributes["macrolanguage_of"] == "nor"

    def test_zero_records_is_format_error(self, tmp_path):
        (tmp_path / "unrelated.csv").write_text("a,b\n1,2\n")
        with pytest.raises(FormatError, match="zero records"):
            parse_source(_descriptor("iso_tables", tmp_path, "csv"), list(tmp_path.iterdir()))


def test_raw_record_requires_identifiers():
    with pytest.raises(ValueError, match="no identifiers"):
        RawRecord("languoid", {}, {}, "x", "f:1")
    with pytest.raises(ValueError, match="not valid"):
        RawRecord("languoid", {IdentifierType.ISO639_3: "nope!"}, {}, "x", "f:1")


class TestParseDeprecations:
    def test_sil_split_row(self):
        d = _descriptor("sil_deprecations", FIXTURE_SOURCES / "sil_deprecations", "tsv")
        records = parse_deprecations(d, list((FIXTURE_SOURCES / "sil_deprecations").iterdir()))
        eml = next(r for r in records if r.code == "eml")
        assert eml.change_kind is ChangeKind.SPLIT
        assert eml.replacements == ("egl", "rgn")
        assert eml.year == 2009
        assert eml.id_type is IdentifierType.ISO639_3

    def test_sil_retire_row_has_no_replacements(self):
        d = _descriptor("sil_deprecations", FIXTURE_SOURCES / "sil_deprecations", "tsv")
        records = parse_deprecations(d, list((FIXTURE_SOURCES / "sil_deprecations").iterdir()))
        dha = next(r for r in records if r.code == "dha")
        assert dha.change_kind is ChangeKind.RETIRE
        assert dha.replacements == ()

    def test_iana_replace_row(self):
        d = _descriptor("iana_registry", FIXTURE_SOURCES / "iana_registry", "registry_text")
        records = parse_deprecations(d, list((FIXTURE_SOURCES / "iana_registry").iterdir()))
        iw = next(r for r in records if r.code == "iw")
        assert iw.change_kind is ChangeKind.REPLACE
        assert iw.replacements == ("he",)
        assert iw.id_type is IdentifierType.ISO639_1
        assert iw.year == 1989

    def test_iana_region_records_ignored(self):
        d = _descriptor("iana_registry", FIXTURE_SOURCES / "iana_registry", "registry_text")
        records = parse_deprecations(d, list((FIXTURE_SOURCES / "iana_registry").iterdir()))
        assert all(r.code != "AN" for r in records)

    def test_invalid_replacement_skipped_and_reported(self, tmp_path):
        f = tmp_path / "retirements.tsv"
        f.write_text("code\tname\tchange_type\treplacements\tyear\nabc\tX\tC\tBAD!\t2000\nxyz\tY\tN\t\t2001\n")
        problems: list[ParseProblem] = []
        records = parse_deprecations(_descriptor("sil_deprecations", tmp_path, "tsv"), [f], problems)
        assert [r.code for r in records] == ["xyz"]
        assert len(problems) == 1


class TestPluggableFetcher:
    def test_url_locator_uses_custom_fetcher(self, tmp_path):
        def fake_fetcher(descriptor, staging):
            (staging / "wikidata_map.tsv").write_text("qid\tiso639_3\nQ188\tdeu\n")
            (staging / "VERSION").write_text("42\n")

        d = SourceDescriptor("wikidata_map", "https://example.invalid/dump", "tsv")
        result = fetch_source(d, tmp_path / "cache", fetcher=fake_fetcher)
        assert result.refreshed is True
        assert result.version == "42"
        assert {f.name for f in result.files} == {"VERSION", "wikidata_map.tsv"}
        # second fetch: upstream unchanged, cache answers
        again = fetch_source(d, tmp_path / "cache", fetcher=fake_fetcher)
        assert again.refreshed is False

    def test_url_locator_without_fetcher_falls_back_to_cache_or_fails(self, tmp_path):
        d = SourceDescriptor("wikidata_map", "https://example.invalid/dump", "tsv")
        with pytest.raises(FetchError):
            fetch_source(d, tmp_path / "cache")
