"""Rank metrics, paired significance testing, and corpus masking.

Metrics use binary gains. Queries without any relevant sentence are skipped
from every mean (logged), matching the recall definition; a missing query in
a run counts as an empty ranking.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import DataError, Quantity, Sentence
from .corpus import Collection

log = logging.getLogger("quantrank")

MASK_TOKEN = "[MASK]"

DEFAULT_PRECISION_K = 10
DEFAULT_MRR_K = 10
DEFAULT_NDCG_K = 10
DEFAULT_RECALL_K = 100


def precision_at(ranked: list[str], relevant: set[str], k: int) -> float:
    if k <= 0:
        return 0.0
    hits = sum(1 for sid in ranked[:k] if sid in relevant)
    return hits / k


def mrr_at(ranked: list[str], relevant: set[str], k: int) -> float:
    for i, sid in enumerate(ranked[:k], start=1):
        if sid in relevant:
            return 1.0 / i
    return 0.0


def ndcg_at(ranked: list[str], relevant: set[str], k: int) -> float:
    """Binary-gain NDCG with 1/log2(rank+1) discounts, ideal clipped at k."""
    if not relevant:
        return 0.0
    dcg = sum(
        1.0 / math.log2(i + 1)
        for i, sid in enumerate(ranked[:k], start=1)
        if sid in relevant
    )
    ideal = sum(1.0 / math.log2(i + 1) for i in range(1, min(len(relevant), k) + 1))
    return dcg / ideal if ideal > 0 else 0.0


def recall_at(ranked: list[str], relevant: set[str], k: int) -> Optional[float]:
    """Fraction of relevant found in the top k; None when nothing is relevant."""
    if not relevant:
        return None
    hits = sum(1 for sid in ranked[:k] if sid in relevant)
    return hits / len(relevant)


METRIC_KEYS = ("p@10", "mrr@10", "ndcg@10", "r@100")


@dataclass
class RunMetrics:
    per_query: dict[str, dict[str, float]] = field(default_factory=dict)
    means: dict[str, float] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)
    latency: Optional[dict] = None

    def to_dict(self) -> dict:
        out = {
            "means": self.means,
            "per_query": self.per_query,
            "skipped": self.skipped,
        }
        if self.latency is not None:
            out["latency"] = self.latency
        return out


def evaluate_run(
    run: dict[str, list[str]],
    qrels: dict[str, set[str]],
    precision_k: int = DEFAULT_PRECISION_K,
    mrr_k: int = DEFAULT_MRR_K,
    ndcg_k: int = DEFAULT_NDCG_K,
    recall_k: int = DEFAULT_RECALL_K,
) -> RunMetrics:
    """Score a run against qrels.

    Iterates the qrels queries; a query absent from the run scores zero on
    everything. Queries with no relevant sentence are skipped from the means
    with a warning.
    """
    metrics = RunMetrics()
    for qid in sorted(qrels):
        relevant = qrels[qid]
        if not relevant:
            metrics.skipped.append(qid)
            continue
        ranked = run.get(qid, [])
        metrics.per_query[qid] = {
            "p@10": precision_at(ranked, relevant, precision_k),
            "mrr@10": mrr_at(ranked, relevant, mrr_k),
            "ndcg@10": ndcg_at(ranked, relevant, ndcg_k),
            "r@100": recall_at(ranked, relevant, recall_k),
        }
    if metrics.skipped:
        log.warning(
            "evaluate: skipped %d queries with no relevant sentences",
            len(metrics.skipped),
        )
    n = len(metrics.per_query)
    for key in METRIC_KEYS:
        metrics.means[key] = (
            sum(q[key] for q in metrics.per_query.values()) / n if n else 0.0
        )
    return metrics


def permutation_test(
    scores_a: dict[str, float],
    scores_b: dict[str, float],
    iterations: int = 10000,
    seed: int = 0,
) -> float:
    """Two-sided paired sign-flip permutation test.

    p = fraction of random sign assignments whose |mean difference| reaches
    the observed |mean difference|. Identical inputs give p = 1.0.
    """
    if set(scores_a) != set(scores_b):
        raise DataError("permutation test requires the same query ids on both sides")
    if iterations < 1:
        raise ValueError("iterations must be positive")
    qids = sorted(scores_a)
    diffs = np.asarray([scores_a[q] - scores_b[q] for q in qids], dtype=np.float64)
    if len(diffs) == 0:
        return 1.0
    observed = abs(float(diffs.mean()))
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(iterations, len(diffs))) * 2 - 1
    permuted = np.abs((signs * diffs).mean(axis=1))
    return float((permuted >= observed).mean())


def read_qrels(path) -> dict[str, set[str]]:
    """Read 4-column qrels: qid 0 sent_id rel. rel > 0 marks relevant."""
    qrels: dict[str, set[str]] = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read qrels {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 qrels columns")
            qid, _, sid, rel = parts
            try:
                relevance = int(rel)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad relevance {rel!r}") from exc
            qrels.setdefault(qid, set())
            if relevance > 0:
                qrels[qid].add(sid)
    return qrels


def write_qrels(path, qrels: dict[str, set[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(qrels):
            for sid in sorted(qrels[qid]):
                fh.write(f"{qid} 0 {sid} 1\n")


def mask_sentence_text(text: str, quantities: Iterable[Quantity], mode: str) -> str:
    """Replace value spans (mode="value") or unit surface spans
    (mode="unit") with the mask token. Right-to-left so offsets stay valid."""
    if mode not in ("value", "unit"):
        raise ValueError(f"unknown mask mode {mode!r}")
    spans: set[tuple[int, int]] = set()
    for q in quantities:
        if mode == "value":
            spans.add(q.span)
        elif q.unit_span is not None:
            spans.add(q.unit_span)
    for start, end in sorted(spans, reverse=True):
        text = text[:start] + MASK_TOKEN + text[end:]
    return text


def mask_corpus(collection: Collection, mode: str) -> Collection:
    """Masked copy of a collection: texts transformed, sent_ids preserved.

    Quantity annotations are dropped since their spans no longer apply.
    """
    masked = Collection()
    for sentence in collection.sentences:
        masked.add(
            Sentence(
                sent_id=sentence.sent_id,
                doc_id=sentence.doc_id,
                text=mask_sentence_text(sentence.text, sentence.quantities, mode),
            )
        )
    return masked


def latency_summary(durations_ms: list[float]) -> dict:
    if not durations_ms:
        return {"n": 0, "mean_ms": 0.0, "p95_ms": 0.0}
    ordered = sorted(durations_ms)
    index = min(len(ordered) - 1, math.ceil(0.95 * len(ordered)) - 1)
    return {
        "n": len(ordered),
        "mean_ms": sum(ordered) / len(ordered),
        "p95_ms": ordered[index],
    }


def format_metrics(metrics: RunMetrics, per_query: bool = False) -> str:
    lines = []
    if per_query:
        lines.append(f"{'qid':<28}" + "".join(f"{k:>10}" for k in METRIC_KEYS))
        for qid in sorted(metrics.per_query):
            row = metrics.per_query[qid]
            lines.append(
                f"{qid:<28}" + "".join(f"{row[k]:>10.4f}" for k in METRIC_KEYS)
            )
    lines.append(f"{'mean':<28}" + "".join(f"{metrics.means[k]:>10.4f}" for k in METRIC_KEYS))
    if metrics.skipped:
        lines.append(f"skipped (no relevant): {len(metrics.skipped)}")
    if metrics.latency:
        lines.append(
            "latency: mean {mean_ms:.2f} ms, p95 {p95_ms:.2f} ms over {n} queries".format(
                **metrics.latency
            )
        )
    return "\n".join(lines)
