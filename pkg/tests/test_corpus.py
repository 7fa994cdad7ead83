"""Corpus ingestion: splitting, JSONL parsing, index file round-trip."""

import json

import pytest

from quantrank.core import DataError, Sentence
from quantrank.corpus import (
    Collection,
    build_collection,
    iter_jsonl,
    load_corpus,
    load_index_file,
    save_index_file,
    split_sentences,
)


class TestSplitSentences:
    def test_basic_boundaries(self):
        text = "It costs $5. Also it is blue! Is it heavy? No."
        assert split_sentences(text) == [
            "It costs $5.",
            "Also it is blue!",
            "Is it heavy?",
            "No.",
        ]

    def test_abbreviations_do_not_split(self):
        text = "Dr. Smith weighs 80 kg. He is tall."
        assert split_sentences(text) == ["Dr. Smith weighs 80 kg.", "He is tall."]

    def test_decimal_points_do_not_split(self):
        text = "It rose 2.5 percent. Then it fell."
        assert split_sentences(text) == ["It rose 2.5 percent.", "Then it fell."]

    def test_lowercase_continuation_not_split(self):
        assert split_sentences("approx. nothing here") == ["approx. nothing here"]

    def test_digit_starts_sentence(self):
        text = "Sales doubled. 300 units shipped."
        assert split_sentences(text) == ["Sales doubled.", "300 units shipped."]

    def test_empty_text(self):
        assert split_sentences("") == []
        assert split_sentences("   ") == []


class TestBuildCollection:
    def test_two_documents_five_sentences(self, catalog):
        records = [
            {
                "doc_id": "d1",
                "text": "The phone costs 200 euros. It ships Friday. Reviews are good.",
            },
            {"doc_id": "d2", "text": "The car reaches 150 km/h. It seats four."},
        ]
        collection = build_collection(records, catalog)
        assert len(collection) == 5
        assert [s.sent_id for s in collection.sentences] == [
            "d1#0",
            "d1#1",
            "d1#2",
            "d2#0",
            "d2#1",
        ]
        assert collection.get("d1#0").quantities[0].unit == "euro"
        assert collection.get("d2#0").quantities[0].unit == "kilometer-per-hour"

    def test_pre_split_records_bypass_splitter(self, catalog):
        records = [{"sent_id": "x#0", "text": "First part. Second part."}]
        collection = build_collection(records, catalog)
        # the two-sentence text stays one retrieval unit
        assert len(collection) == 1
        assert collection.get("x#0").text == "First part. Second part."

    def test_duplicate_sent_id_rejected(self, catalog):
        records = [
            {"sent_id": "x#0", "text": "one"},
            {"sent_id": "x#0", "text": "two"},
        ]
        with pytest.raises(DataError):
            build_collection(records, catalog)

    def test_missing_text_rejected(self, catalog):
        with pytest.raises(DataError):
            build_collection([{"doc_id": "d"}], catalog)

    def test_missing_ids_rejected(self, catalog):
        with pytest.raises(DataError):
            build_collection([{"text": "no ids at all"}], catalog)

    def test_concept_annotations_recorded(self, catalog):
        records = [{"sent_id": "s#0", "text": "Acme laptop costs 899 dollars."}]
        collection = build_collection(records, catalog)
        assert collection.concepts_for("s#0") == (("Acme laptop", 0),)


class TestCollection:
    def test_membership_and_lookup(self, catalog):
        collection = build_collection(
            [{"sent_id": "a#0", "text": "hello"}], catalog
        )
        assert "a#0" in collection
        assert "a#1" not in collection
        assert collection.get("a#1") is None

    def test_duplicate_add_rejected(self):
        collection = Collection()
        collection.add(Sentence("a#0", "a", "x"))
        with pytest.raises(DataError):
            collection.add(Sentence("a#0", "a", "y"))


class TestJsonl:
    def test_iter_jsonl_skips_blank_and_comments(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('\n# comment\n{"a": 1}\n', encoding="utf-8")
        assert list(iter_jsonl(path)) == [(3, {"a": 1})]

    def test_iter_jsonl_malformed_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"a": 1}\n{broken\n', encoding="utf-8")
        with pytest.raises(DataError) as err:
            list(iter_jsonl(path))
        assert ":2:" in str(err.value)

    def test_iter_jsonl_non_object_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("[1, 2]\n", encoding="utf-8")
        with pytest.raises(DataError):
            list(iter_jsonl(path))

    def test_iter_jsonl_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            list(iter_jsonl(tmp_path / "absent.jsonl"))

    def test_load_corpus(self, tmp_path, catalog):
        path = tmp_path / "c.jsonl"
        path.write_text(
            json.dumps({"doc_id": "d", "text": "It costs 5 euros."}) + "\n",
            encoding="utf-8",
        )
        collection = load_corpus(path, catalog)
        assert len(collection) == 1
        assert collection.sentences[0].quantities[0].unit == "euro"


class TestIndexFile:
    def test_round_trip(self, tmp_path, catalog, cent_collection):
        path = tmp_path / "index.json"
        params = {"catalog": "builtin", "corpus": "memory"}
        save_index_file(path, cent_collection, params)
        loaded, loaded_params = load_index_file(path)
        assert loaded_params == params
        assert len(loaded) == len(cent_collection)
        for original in cent_collection.sentences:
            restored = loaded.get(original.sent_id)
            assert restored == original
            assert loaded.concepts_for(original.sent_id) == cent_collection.concepts_for(
                original.sent_id
            )

    def test_unrecognized_format_rejected(self, tmp_path):
        path = tmp_path / "index.json"
        path.write_text(json.dumps({"format": "other", "version": 1}))
        with pytest.raises(DataError):
            load_index_file(path)

    def test_unsupported_version_rejected(self, tmp_path):
        path = tmp_path / "index.json"
        path.write_text(json.dumps({"format": "quantrank-index", "version": 99}))
        with pytest.raises(DataError):
            load_index_file(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "index.json"
        path.write_text("{nope")
        with pytest.raises(DataError):
            load_index_file(path)
