from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medcosmos.corpus import (
    CorpusError,
    IngestRejection,
    SegmentationRules,
    ingest_corpus,
    load_snapshot,
    save_snapshot,
    search_documents,
    segment,
    segment_document,
)


class TestSegmentation:
    def test_blank_line_split(self):
        assert segment_document("A\n\nB\n\nC") == ["A", "B", "C"]

    def test_single_block_identity(self):
        assert segment_document("A") == ["A"]

    def test_section_rule_one_paragraph_per_section(self):
        # Hand-traced against the header rule: each "Word...:" line starts a section.
        body = (
            "Chief complaint: facial swelling and pain\n"
            "History: long-term zoledronic acid use\n"
            "Examination: exposed bone in region 46"
        )
        rules = SegmentationRules(mode="sections")
        parts = segment_document(body, rules)
        assert parts == [
            "Chief complaint: facial swelling and pain",
            "History: long-term zoledronic acid use",
            "Examination: exposed bone in region 46",
        ]

    def test_whitespace_only_body_warns_and_returns_empty(self, caplog):
        with caplog.at_level("WARNING"):
            result = segment(" \n \n ")
        assert result.whitespace_only
        assert result.paragraphs == ()
        assert result.rejoin() == " \n \n "
        assert any("whitespace-only" in r.message for r in caplog.records)

    def test_empty_body_is_error(self):
        with pytest.raises(CorpusError):
            segment("")

    def test_no_empty_paragraphs_with_messy_separators(self):
        result = segment("\n\nA\n\n  \n\nB\n\n")
        assert list(result.paragraphs) == ["A", "B"]
        assert result.rejoin() == "\n\nA\n\n  \n\nB\n\n"

    @settings(max_examples=200)
    @given(st.text(alphabet="ab \n:", min_size=1))
    def test_round_trip_blank_line(self, body):
        if not body.strip():
            return
        assert segment(body).rejoin() == body

    @settings(max_examples=200)
    @given(st.text(alphabet="aB \n:", min_size=1))
    def test_round_trip_sections(self, body):
        if not body.strip():
            return
        rules = SegmentationRules(mode="sections")
        assert segment(body, rules).rejoin() == body


class TestIngest:
    def test_three_blocks_one_document(self):
        lines = [json.dumps({"title": "t", "body": "A\n\nB\n\nC"})]
        snapshot = ingest_corpus(lines)
        assert len(snapshot.documents) == 1
        assert len(snapshot.paragraphs) == 3
        doc = snapshot.documents[0]
        assert doc.text_length == sum(len(p.text) for p in snapshot.paragraphs)
        assert [snapshot.paragraph_index[pid].index for pid in doc.paragraph_ids] == [0, 1, 2]

    def test_empty_source_fails(self):
        with pytest.raises(CorpusError):
            ingest_corpus([])

    def test_reingest_is_deterministic(self, small_docs):
        lines = [json.dumps(d) for d in small_docs]
        first = ingest_corpus(list(lines))
        second = ingest_corpus(list(lines))
        assert first.content_hash == second.content_hash
        assert first.canonical_json() == second.canonical_json()

    def test_malformed_entries_are_rejected_with_line_numbers(self):
        lines = [
            json.dumps({"title": "ok", "body": "text"}),
            "{not json",
            json.dumps({"title": "no body"}),
            json.dumps({"title": "ok2", "body": "more text"}),
        ]
        rejections: list[IngestRejection] = []
        snapshot = ingest_corpus(lines, rejections=rejections)
        assert len(snapshot.documents) == 2
        assert [r.line_number for r in rejections] == [2, 3]

    def test_all_entries_malformed_fails(self):
        with pytest.raises(CorpusError):
            ingest_corpus(["{bad", json.dumps({"title": "x"})])

    def test_derived_ids_are_content_stable(self):
        lines = [json.dumps({"title": "t", "body": "A\n\nB"})]
        a = ingest_corpus(list(lines))
        b = ingest_corpus(list(lines))
        assert [d.id for d in a.documents] == [d.id for d in b.documents]
        assert [p.id for p in a.paragraphs] == [p.id for p in b.paragraphs]


class TestSearch:
    def test_conjunctive_match(self, small_snapshot):
        assert search_documents(small_snapshot, ["bone", "expose"]) == ["doc-2"]

    def test_no_hit(self, small_snapshot):
        assert search_documents(small_snapshot, ["zebra"]) == []

    def test_substring_match_multiple_docs(self):
        lines = [
            json.dumps({"id": "1", "title": "", "body": "abc"}),
            json.dumps({"id": "2", "title": "", "body": "xyz"}),
            json.dumps({"id": "3", "title": "", "body": "a"}),
        ]
        snapshot = ingest_corpus(lines)
        assert search_documents(snapshot, ["a"]) == ["1", "3"]

    def test_case_folded(self, small_snapshot):
        assert search_documents(small_snapshot, ["OSTEONECROSIS"]) == ["doc-2"]

    def test_empty_keywords_rejected(self, small_snapshot):
        with pytest.raises(CorpusError):
            search_documents(small_snapshot, [])
        with pytest.raises(CorpusError):
            search_documents(small_snapshot, ["bone", "  "])

    @given(st.lists(st.sampled_from(["bone", "ct", "pus", "pain", "pylori", "a", "e"]), min_size=1, max_size=4))
    def test_adding_keyword_never_grows_result(self, small_snapshot, keywords):
        result = set(search_documents(small_snapshot, keywords))
        narrowed = set(search_documents(small_snapshot, keywords + ["bone"]))
        assert narrowed <= result


class TestPersistence:
    def test_save_load_round_trip(self, small_snapshot, tmp_path):
        root = save_snapshot(small_snapshot, tmp_path)
        assert (root / "corpus.jsonl").exists()
        assert (root / "paragraphs.jsonl").exists()
        meta = json.loads((root / "meta.json").read_text())
        assert meta["content_hash"] == small_snapshot.content_hash
        loaded = load_snapshot(root)
        assert loaded.canonical_json() == small_snapshot.canonical_json()

    def test_saved_files_byte_identical_across_ingests(self, small_docs, tmp_path):
        lines = [json.dumps(d) for d in small_docs]
        a = save_snapshot(ingest_corpus(list(lines)), tmp_path / "a")
        b = save_snapshot(ingest_corpus(list(lines)), tmp_path / "b")
        for name in ("corpus.jsonl", "paragraphs.jsonl"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
