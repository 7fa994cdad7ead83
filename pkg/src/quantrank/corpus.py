"""Corpus ingestion: sentence splitting, extraction, persistence.

A collection is the extracted form of a corpus: sentences with their
quantities plus the per-quantity concept annotations datagen needs. The
persisted index file stores exactly this; term and quantity indexes are
rebuilt deterministically on load.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .core import DataError, Sentence, UnitCatalog, make_sent_id
from .extract import extract_sentence

FORMAT_NAME = "quantrank-index"
FORMAT_VERSION = 1

# Words whose trailing period does not end a sentence.
ABBREVIATIONS = frozenset(
    [
        "e.g.",
        "i.e.",
        "dr.",
        "mr.",
        "mrs.",
        "ms.",
        "prof.",
        "vs.",
        "etc.",
        "inc.",
        "co.",
        "corp.",
        "ltd.",
        "no.",
        "approx.",
        "fig.",
        "u.s.",
        "u.k.",
    ]
)

_TERMINATOR_RE = re.compile(r"[.!?]")


def split_sentences(text: str) -> list[str]:
    """Split document text into sentences.

    A boundary is a terminator (. ! ?) followed by whitespace and an
    uppercase letter or digit, unless the terminator closes a known
    abbreviation.
    """
    sentences: list[str] = []
    start = 0
    for m in _TERMINATOR_RE.finditer(text):
        i = m.end()
        j = i
        while j < len(text) and text[j].isspace():
            j += 1
        if j == i or j >= len(text):
            continue
        if not (text[j].isupper() or text[j].isdigit()):
            continue
        head = text[:i].rsplit(None, 1)
        if head and head[-1].casefold() in ABBREVIATIONS:
            continue
        chunk = text[start:i].strip()
        if chunk:
            sentences.append(chunk)
        start = j
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


@dataclass
class Collection:
    """Extracted corpus: sentences plus per-quantity concept annotations."""

    sentences: list[Sentence] = field(default_factory=list)
    concepts: dict[str, tuple[tuple[str, int], ...]] = field(default_factory=dict)
    _by_id: dict[str, Sentence] = field(default_factory=dict, repr=False)

    def add(self, sentence: Sentence, concepts: tuple[tuple[str, int], ...] = ()):
        if sentence.sent_id in self._by_id:
            raise DataError(f"duplicate sent_id: {sentence.sent_id}")
        self.sentences.append(sentence)
        self._by_id[sentence.sent_id] = sentence
        if concepts:
            self.concepts[sentence.sent_id] = tuple(concepts)

    def __len__(self) -> int:
        return len(self.sentences)

    def __contains__(self, sent_id: str) -> bool:
        return sent_id in self._by_id

    def get(self, sent_id: str) -> Optional[Sentence]:
        return self._by_id.get(sent_id)

    def concepts_for(self, sent_id: str) -> tuple[tuple[str, int], ...]:
        return self.concepts.get(sent_id, ())


def iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (line number, record) pairs from a JSONL file.

    Raises DataError with file and line context on malformed lines.
    """
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, record


def build_collection(
    records: Iterable[dict], catalog: UnitCatalog, source: str = "corpus"
) -> Collection:
    """Run extraction over corpus records.

    Records either carry full documents ({"doc_id", "text"}, split here) or
    pre-split sentences ({"sent_id", "text"}). Duplicate sentence ids are
    rejected.
    """
    collection = Collection()
    for n, record in enumerate(records):
        if "text" not in record:
            raise DataError(f"{source}: record #{n} has no text field")
        text = record["text"]
        if "sent_id" in record:
            sent_id = record["sent_id"]
            doc_id = record.get("doc_id", sent_id.split("#")[0])
            _add_sentence(collection, sent_id, doc_id, text, catalog)
        else:
            doc_id = record.get("doc_id")
            if doc_id is None:
                raise DataError(f"{source}: record #{n} needs doc_id or sent_id")
            for ordinal, sentence_text in enumerate(split_sentences(text)):
                _add_sentence(
                    collection,
                    make_sent_id(doc_id, ordinal),
                    doc_id,
                    sentence_text,
                    catalog,
                )
    return collection


def _add_sentence(
    collection: Collection, sent_id: str, doc_id: str, text: str, catalog: UnitCatalog
):
    extraction = extract_sentence(text, catalog)
    sentence = Sentence(
        sent_id=sent_id,
        doc_id=doc_id,
        text=text,
        quantities=extraction.quantities,
    )
    collection.add(sentence, extraction.concepts)


def load_corpus(path, catalog: UnitCatalog) -> Collection:
    return build_collection(
        (record for _, record in iter_jsonl(path)), catalog, source=str(path)
    )


def save_index_file(path, collection: Collection, params: dict) -> None:
    """Persist a collection with its build parameters as one JSON file."""
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "params": params,
        "sentences": [
            {
                **sentence.to_dict(),
                "concepts": [list(c) for c in collection.concepts_for(sentence.sent_id)],
            }
            for sentence in collection.sentences
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_index_file(path) -> tuple[Collection, dict]:
    """Load a persisted collection. Returns (collection, params)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read index {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(
            f"index {path} is not valid JSON (line {exc.lineno})"
        ) from exc
    if payload.get("format") != FORMAT_NAME:
        raise DataError(f"index {path}: unrecognized format header")
    if payload.get("version") != FORMAT_VERSION:
        raise DataError(
            f"index {path}: unsupported version {payload.get('version')!r}"
        )
    collection = Collection()
    for record in payload.get("sentences", ()):
        sentence = Sentence.from_dict(record)
        concepts = tuple(
            (c[0], int(c[1])) for c in record.get("concepts", ())
        )
        collection.add(sentence, concepts)
    return collection, payload.get("params", {})
