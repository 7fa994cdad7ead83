"""Ranking pipelines fusing term and quantity evidence, plus TREC run I/O.

qbm25 implements normalized-BM25 + alpha * indicator * quantity-score: the
indicator restricts the quantity bonus to sentences that matched at least
one search term, so pure number coincidences cannot surface on their own.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import DataError, QuantityQuery
from .extract import QUERY_STOPWORDS, tokenize
from .qindex import PhiSet, QuantityIndex, satisfies
from .tindex import DEFAULT_CUTOFF, TermIndex

log = logging.getLogger("quantrank")

DEFAULT_ALPHA = 1.0


@dataclass(frozen=True)
class ScoredResult:
    sent_id: str
    score: float
    term_score: float = 0.0
    quantity_score: float = 0.0


@dataclass(frozen=True)
class RunEntry:
    """One candidate row of an external run."""

    sent_id: str
    score: float
    match: Optional[bool] = None


def lexical_tokens(text: str) -> list[str]:
    """Quantity-unaware query tokens: raw tokens minus stopwords.

    This is what the plain BM25 baseline scores, value and unit tokens
    included. Term-only queries reduce to exactly the parsed term set, which
    keeps the qbm25 fallback contract exact.
    """
    return [t for t in tokenize(text) if t not in QUERY_STOPWORDS]


def sentence_matches(
    qindex: QuantityIndex, query: QuantityQuery, sent_id: str
) -> bool:
    """True when at least one sentence quantity has the query's unit and
    satisfies the condition (exact decimal comparison)."""
    if not query.has_quantity:
        return False
    for q in qindex.quantities_of(sent_id):
        if q.unit == query.quantity.unit and satisfies(
            query.condition, query.quantity.value, q.value
        ):
            return True
    return False


def search_bm25(
    tindex: TermIndex, query: QuantityQuery, cutoff: int = DEFAULT_CUTOFF
) -> list[ScoredResult]:
    """Plain BM25 over the quantity-unaware token set."""
    tokens = lexical_tokens(query.raw_text) if query.raw_text else list(query.terms)
    ranked = tindex.top_terms_search(tokens, cutoff)
    return [ScoredResult(sid, score, term_score=score) for sid, score in ranked]


def search_bm25_filter(
    tindex: TermIndex,
    qindex: QuantityIndex,
    query: QuantityQuery,
    cutoff: int = DEFAULT_CUTOFF,
) -> list[ScoredResult]:
    """BM25 order with non-satisfying results removed.

    A result survives only if some quantity of its sentence carries the
    query unit and satisfies the condition. Term-only queries pass through
    unfiltered.
    """
    base = search_bm25(tindex, query, cutoff)
    if not query.has_quantity:
        return base
    return [r for r in base if sentence_matches(qindex, query, r.sent_id)]


def search_qbm25(
    tindex: TermIndex,
    qindex: QuantityIndex,
    query: QuantityQuery,
    alpha: float = DEFAULT_ALPHA,
    cutoff: int = DEFAULT_CUTOFF,
    depth: int = DEFAULT_CUTOFF,
    phi_set: Optional[PhiSet] = None,
) -> list[ScoredResult]:
    """Normalized BM25 over parsed terms plus alpha-weighted quantity score.

    Only sentences retrieved by the term search are scored, implementing
    the term-match indicator. A term-only query returns the term ranking
    unchanged and never touches the quantity index.
    """
    ranked = tindex.top_terms_search(list(query.terms), depth)
    if not query.has_quantity:
        return [
            ScoredResult(sid, score, term_score=score) for sid, score in ranked
        ][:cutoff]
    sids = [sid for sid, _ in ranked]
    qscores = qindex.score_sentences(sids, query.condition, query.quantity, phi_set)
    results = [
        ScoredResult(sid, term + alpha * qs, term_score=term, quantity_score=qs)
        for (sid, term), qs in zip(ranked, qscores)
    ]
    results.sort(key=lambda r: (-r.score, r.sent_id))
    return results[:cutoff]


def rerank_external(
    entries: list[RunEntry],
    qindex: QuantityIndex,
    query: QuantityQuery,
    alpha: float = DEFAULT_ALPHA,
    mode: str = "topk",
    phi_set: Optional[PhiSet] = None,
) -> list[ScoredResult]:
    """Add the quantity score on top of an external ranking.

    Raw scores are normalized by the per-query maximum over the supplied
    candidates (all zero when the maximum is not positive). topk mode adds
    alpha * qs to every candidate; gated mode multiplies by the run's match
    flag and degrades to topk with a warning when flags are missing.
    Candidates not present in the collection are warned about and dropped.
    Equal combined scores keep their input order, so alpha=0 reproduces the
    input ranking exactly.
    """
    if mode not in ("topk", "gated"):
        raise ValueError(f"unknown rerank mode {mode!r}")
    kept = [e for e in entries if e.sent_id in qindex.sentence_quantities]
    dropped = len(entries) - len(kept)
    if dropped:
        log.warning("rerank: dropped %d candidates missing from collection", dropped)
    if not kept:
        return []
    top = max(e.score for e in kept)
    if top > 0:
        normalized = [e.score / top for e in kept]
    else:
        normalized = [0.0 for _ in kept]
    use_gate = mode == "gated"
    if use_gate and any(e.match is None for e in kept):
        log.warning("rerank: gated mode without match flags, degrading to topk")
        use_gate = False
    if query.has_quantity:
        qscores = qindex.score_sentences(
            [e.sent_id for e in kept], query.condition, query.quantity, phi_set
        )
    else:
        qscores = [0.0] * len(kept)
    combined = []
    for i, entry in enumerate(kept):
        gate = (1.0 if entry.match else 0.0) if use_gate else 1.0
        combined.append(normalized[i] + alpha * gate * qscores[i])
    order = sorted(range(len(kept)), key=lambda i: (-combined[i], i))
    return [
        ScoredResult(
            kept[i].sent_id,
            combined[i],
            term_score=normalized[i],
            quantity_score=qscores[i],
        )
        for i in order
    ]


def write_run(
    path,
    runs: dict[str, list[ScoredResult]],
    tag: str,
    header: Optional[dict] = None,
    match_flags: Optional[dict[tuple[str, str], bool]] = None,
) -> None:
    """Write a TREC run file: qid Q0 sent_id rank score tag [match=0|1].

    An optional '#'-prefixed JSON header carries the resolved configuration;
    readers here skip comment lines.
    """
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        for qid in runs:
            for rank, result in enumerate(runs[qid], start=1):
                line = (
                    f"{qid} Q0 {result.sent_id} {rank} "
                    f"{result.score:.6f} {tag}"
                )
                if match_flags is not None:
                    flag = match_flags.get((qid, result.sent_id))
                    if flag is not None:
                        line += f" match={int(flag)}"
                fh.write(line + "\n")


def read_run(path) -> dict[str, list[RunEntry]]:
    """Read a TREC run file preserving row order per query."""
    runs: dict[str, list[RunEntry]] = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read run {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 6:
                raise DataError(f"{path}:{lineno}: expected 6+ run columns")
            qid, _, sid, _, score, _ = parts[:6]
            match: Optional[bool] = None
            for extra in parts[6:]:
                if extra.startswith("match="):
                    match = extra[len("match=") :] not in ("0", "false")
            try:
                runs.setdefault(qid, []).append(RunEntry(sid, float(score), match))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad score {score!r}") from exc
    return runs
