"""Inverted term index with Okapi BM25 scoring.

IDF uses the +1 smoothed form ln(1 + (N - df + 0.5) / (df + 0.5)), which
stays positive even for terms present in every sentence. Defaults k1=0.5,
b=0.5 reflect short sentence-level documents.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Callable, Iterable, Optional

import numpy as np

from . import _kernels as K
from .core import DataError, Sentence
from .extract import tokenize

DEFAULT_K1 = 0.5
DEFAULT_B = 0.5
DEFAULT_CUTOFF = 1000


class TermIndex:
    def __init__(
        self,
        sentences: Iterable[Sentence],
        k1: float = DEFAULT_K1,
        b: float = DEFAULT_B,
        tokenizer: Callable[[str], list[str]] = tokenize,
    ):
        self.k1 = float(k1)
        self.b = float(b)
        self.tokenizer = tokenizer
        self.sent_ids: list[str] = []
        self._sent_pos: dict[str, int] = {}
        lengths: list[int] = []
        staged: dict[str, list[tuple[int, int]]] = {}
        for sentence in sentences:
            if sentence.sent_id in self._sent_pos:
                raise DataError(f"duplicate sent_id: {sentence.sent_id}")
            pos = len(self.sent_ids)
            self.sent_ids.append(sentence.sent_id)
            self._sent_pos[sentence.sent_id] = pos
            tokens = tokenizer(sentence.text)
            lengths.append(len(tokens))
            for term, tf in Counter(tokens).items():
                staged.setdefault(term, []).append((pos, tf))
        self.n_docs = len(self.sent_ids)
        self.lengths = lengths
        total = float(sum(lengths))
        self.avg_len = total / self.n_docs if self.n_docs else 0.0
        self._postings: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for term, pairs in staged.items():
            pairs.sort()
            self._postings[term] = (
                np.asarray([p for p, _ in pairs], dtype=np.int32),
                np.asarray([tf for _, tf in pairs], dtype=np.float64),
            )
        if self.avg_len > 0:
            norms = [
                self.k1 * (1.0 - self.b + self.b * (length / self.avg_len))
                for length in lengths
            ]
        else:
            norms = [self.k1 * (1.0 - self.b)] * self.n_docs
        self._norms = np.asarray(norms, dtype=np.float64)

    def __contains__(self, sent_id: str) -> bool:
        return sent_id in self._sent_pos

    def df(self, term: str) -> int:
        postings = self._postings.get(term)
        return 0 if postings is None else len(postings[0])

    def tf(self, term: str, sent_id: str) -> int:
        postings = self._postings.get(term)
        pos = self._sent_pos.get(sent_id)
        if postings is None or pos is None:
            return 0
        ids, tfs = postings
        i = int(np.searchsorted(ids, pos))
        if i < len(ids) and ids[i] == pos:
            return int(tfs[i])
        return 0

    def idf(self, term: str) -> float:
        df = self.df(term)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def score_terms(self, terms: Iterable[str]) -> np.ndarray:
        """Raw BM25 scores for every sentence, in index order."""
        scores = np.zeros(self.n_docs, dtype=np.float64)
        k1p1 = self.k1 + 1.0
        for term in terms:
            postings = self._postings.get(term)
            if postings is None:
                continue
            ids, tfs = postings
            K.bm25_accumulate(self.idf(term), k1p1, ids, tfs, self._norms, scores)
        return scores

    def bm25(self, sent_id: str, terms: Iterable[str]) -> float:
        """Raw BM25 of one sentence. Same accumulation order as score_terms."""
        pos = self._sent_pos.get(sent_id)
        if pos is None:
            return 0.0
        k1p1 = self.k1 + 1.0
        norm = float(self._norms[pos])
        score = 0.0
        for term in terms:
            tf = float(self.tf(term, sent_id))
            if tf:
                score += self.idf(term) * tf * k1p1 / (tf + norm)
        return score

    def top_terms_search(
        self, terms: Iterable[str], cutoff: int = DEFAULT_CUTOFF
    ) -> list[tuple[str, float]]:
        """Ranked sentences with scores normalized by the per-query maximum.

        Only sentences containing at least one query term are retrieved, so
        the raw maximum is positive whenever anything is returned and the
        top result normalizes to exactly 1.0. Ties break by ascending
        sent_id.
        """
        scores = self.score_terms(terms)
        hits = np.nonzero(scores > 0.0)[0]
        ranked = sorted(
            ((self.sent_ids[i], float(scores[i])) for i in hits),
            key=lambda pair: (-pair[1], pair[0]),
        )[:cutoff]
        if not ranked:
            return []
        top = ranked[0][1]
        return [(sid, score / top) for sid, score in ranked]


def build_term_index(
    sentences: Iterable[Sentence],
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> TermIndex:
    return TermIndex(sentences, k1=k1, b=b, tokenizer=tokenizer)
