"""Metric, significance, masking, and latency summary tests.

Hand-computed oracles: NDCG for relevant at ranks (1, 3) of 2 equals
1.5 / (1 + 1/log2(3)) = 0.9197207891481876; the n=8 constant-shift
permutation test has exact p = 2/256.
"""

import logging
import math
import random

import pytest

from quantrank.core import DataError
from quantrank.corpus import build_collection
from quantrank.evaluation import (
    MASK_TOKEN,
    evaluate_run,
    format_metrics,
    latency_summary,
    mask_corpus,
    mask_sentence_text,
    mrr_at,
    ndcg_at,
    permutation_test,
    precision_at,
    read_qrels,
    recall_at,
    write_qrels,
)


RANKED = [f"s{i}" for i in range(1, 21)]


class TestPrecision:
    def test_three_of_ten(self):
        assert precision_at(RANKED, {"s2", "s5", "s9"}, 10) == 0.3

    def test_divides_by_k_not_length(self):
        assert precision_at(["s1"], {"s1"}, 10) == 0.1

    def test_empty_ranking(self):
        assert precision_at([], {"s1"}, 10) == 0.0

    def test_all_relevant(self):
        assert precision_at(RANKED, set(RANKED), 10) == 1.0

    def test_nonpositive_k(self):
        assert precision_at(RANKED, {"s1"}, 0) == 0.0


class TestMrr:
    def test_first_hit_at_three(self):
        assert mrr_at(RANKED, {"s3", "s7"}, 10) == pytest.approx(1.0 / 3.0)

    def test_hit_past_cutoff_is_zero(self):
        assert mrr_at(RANKED, {"s11"}, 10) == 0.0

    def test_top_hit(self):
        assert mrr_at(RANKED, {"s1"}, 10) == 1.0


class TestNdcg:
    def test_hand_case_ranks_one_and_three(self):
        got = ndcg_at(RANKED, {"s1", "s3"}, 10)
        assert got == pytest.approx(0.9197207891481876, abs=1e-6)
        assert got == pytest.approx(1.5 / (1.0 + 1.0 / math.log2(3)), abs=1e-12)

    def test_perfect_prefix(self):
        assert ndcg_at(RANKED, {"s1", "s2", "s3"}, 10) == pytest.approx(1.0)

    def test_no_hits(self):
        assert ndcg_at(RANKED, {"x1"}, 10) == 0.0

    def test_no_relevant(self):
        assert ndcg_at(RANKED, set(), 10) == 0.0

    def test_ideal_clipped_at_k(self):
        # more relevant than k: a full top-k of hits is still perfect
        relevant = set(RANKED)
        assert ndcg_at(RANKED, relevant, 10) == pytest.approx(1.0)


class TestRecall:
    def test_fractional(self):
        relevant = {f"s{i}" for i in range(1, 8)} | {"x1", "x2", "x3"}
        assert recall_at(RANKED, relevant, 100) == 0.7

    def test_complete(self):
        assert recall_at(RANKED, {"s4", "s14"}, 100) == 1.0

    def test_zero_relevant_is_none(self):
        assert recall_at(RANKED, set(), 100) is None


class TestEvaluateRun:
    def test_means_over_scored_queries(self):
        run = {"q1": ["a", "b"], "q2": ["c", "d"]}
        qrels = {"q1": {"a"}, "q2": {"d"}}
        metrics = evaluate_run(run, qrels)
        assert metrics.per_query["q1"]["mrr@10"] == 1.0
        assert metrics.per_query["q2"]["mrr@10"] == 0.5
        assert metrics.means["mrr@10"] == 0.75
        assert metrics.means["p@10"] == pytest.approx(0.1)
        assert metrics.skipped == []

    def test_zero_relevant_skipped_with_warning(self, caplog):
        run = {"q1": ["a"], "q2": ["b"]}
        qrels = {"q1": {"a"}, "q2": set()}
        with caplog.at_level(logging.WARNING, logger="quantrank"):
            metrics = evaluate_run(run, qrels)
        assert metrics.skipped == ["q2"]
        assert "q2" not in metrics.per_query
        assert metrics.means["mrr@10"] == 1.0  # q2 excluded from the mean
        assert any("skipped 1" in rec.getMessage() for rec in caplog.records)

    def test_query_missing_from_run_scores_zero(self):
        metrics = evaluate_run({}, {"q1": {"a"}})
        assert metrics.per_query["q1"] == {
            "p@10": 0.0,
            "mrr@10": 0.0,
            "ndcg@10": 0.0,
            "r@100": 0.0,
        }

    def test_padding_beyond_cutoffs_is_invariant(self):
        relevant = {"s1", "s3"}
        base = {"q1": RANKED}
        padded = {"q1": RANKED + [f"pad{i}" for i in range(200)]}
        a = evaluate_run(base, {"q1": relevant}).per_query["q1"]
        b = evaluate_run(padded, {"q1": relevant}).per_query["q1"]
        assert a == b

    def test_format_metrics_lines(self):
        metrics = evaluate_run({"q1": ["a"]}, {"q1": {"a"}})
        brief = format_metrics(metrics)
        assert brief.startswith("mean")
        detailed = format_metrics(metrics, per_query=True)
        assert "q1" in detailed and "mean" in detailed


class TestPermutationTest:
    def test_identical_scores_p_one(self):
        scores = {f"q{i}": random.Random(1).random() for i in range(10)}
        assert permutation_test(scores, dict(scores)) == 1.0

    def test_large_consistent_gap_significant(self):
        rng = random.Random(2)
        base = {f"q{i}": rng.uniform(0.2, 0.6) for i in range(50)}
        better = {qid: score + 0.3 for qid, score in base.items()}
        assert permutation_test(better, base, seed=3) < 0.01

    def test_small_sample_matches_exact_enumeration(self):
        # constant diff over 8 queries: only the two all-same sign
        # assignments reach the observed mean, so exact p = 2/256
        a = {f"q{i}": 0.6 for i in range(8)}
        b = {f"q{i}": 0.5 for i in range(8)}
        exact = 2.0 / 256.0
        p = permutation_test(a, b, iterations=10000, seed=0)
        assert abs(p - exact) < 0.005

    def test_seeded_determinism(self):
        rng = random.Random(4)
        a = {f"q{i}": rng.random() for i in range(12)}
        b = {f"q{i}": rng.random() for i in range(12)}
        p1 = permutation_test(a, b, seed=7)
        p2 = permutation_test(a, b, seed=7)
        assert p1 == p2

    def test_qid_mismatch_rejected(self):
        with pytest.raises(DataError):
            permutation_test({"q1": 0.5}, {"q2": 0.5})

    def test_bad_iterations_rejected(self):
        with pytest.raises(ValueError):
            permutation_test({"q1": 0.5}, {"q1": 0.4}, iterations=0)


class TestMasking:
    @pytest.fixture()
    def phone(self, catalog):
        records = [
            {"sent_id": "m1", "text": "The phone costs €236.50 today."},
            {"sent_id": "m2", "text": "It rained all afternoon."},
        ]
        return build_collection(records, catalog)

    def test_value_mode(self, phone):
        s = phone.get("m1")
        masked = mask_sentence_text(s.text, s.quantities, "value")
        assert masked == "The phone costs €[MASK] today."

    def test_unit_mode(self, phone):
        s = phone.get("m1")
        masked = mask_sentence_text(s.text, s.quantities, "unit")
        assert masked == "The phone costs [MASK]236.50 today."

    def test_quantity_free_text_unchanged(self, phone):
        s = phone.get("m2")
        assert mask_sentence_text(s.text, s.quantities, "value") == s.text

    def test_bad_mode_rejected(self, phone):
        s = phone.get("m1")
        with pytest.raises(ValueError):
            mask_sentence_text(s.text, s.quantities, "concept")

    def test_mask_corpus_preserves_ids_drops_quantities(self, phone):
        masked = mask_corpus(phone, "value")
        assert [s.sent_id for s in masked.sentences] == ["m1", "m2"]
        assert [s.doc_id for s in masked.sentences] == [
            s.doc_id for s in phone.sentences
        ]
        assert MASK_TOKEN in masked.get("m1").text
        assert all(s.quantities == () for s in masked.sentences)

    def test_multiple_quantities_masked_right_to_left(self, catalog):
        records = [
            {"sent_id": "x1", "text": "It fell from €236.50 to €132.00 overnight."}
        ]
        collection = build_collection(records, catalog)
        s = collection.get("x1")
        assert len(s.quantities) == 2
        masked = mask_sentence_text(s.text, s.quantities, "value")
        assert masked == "It fell from €[MASK] to €[MASK] overnight."


class TestLatencySummary:
    def test_empty(self):
        assert latency_summary([]) == {"n": 0, "mean_ms": 0.0, "p95_ms": 0.0}

    def test_p95_index_rule(self):
        durations = [float(i) for i in range(1, 21)]
        summary = latency_summary(durations)
        # ceil(0.95 * 20) - 1 = 18 -> nineteenth smallest
        assert summary["p95_ms"] == 19.0
        assert summary["mean_ms"] == pytest.approx(10.5)
        assert summary["n"] == 20

    def test_singleton(self):
        assert latency_summary([7.5])["p95_ms"] == 7.5

    def test_order_insensitive(self):
        assert latency_summary([3.0, 1.0, 2.0]) == latency_summary([1.0, 2.0, 3.0])


class TestQrelsIO:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "qrels.txt"
        qrels = {"q1": {"s1", "s2"}, "q2": {"s3"}}
        write_qrels(path, qrels)
        assert read_qrels(path) == qrels

    def test_zero_relevance_rows_excluded(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 s1 1\nq1 0 s2 0\nq2 0 s3 0\n")
        got = read_qrels(path)
        assert got == {"q1": {"s1"}, "q2": set()}

    def test_wrong_column_count_rejected(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 s1\n")
        with pytest.raises(DataError, match="4 qrels columns"):
            read_qrels(path)

    def test_bad_relevance_rejected(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 s1 high\n")
        with pytest.raises(DataError, match="high"):
            read_qrels(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataError):
            read_qrels(tmp_path / "none.txt")

    def test_comments_and_blanks_skipped(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("# header\n\nq1 0 s1 1\n")
        assert read_qrels(path) == {"q1": {"s1"}}
