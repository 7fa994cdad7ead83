"""Training data generation: queries from corpus statistics, then
contrastive positive/negative sentence pairs.

Everything is seeded. Each (concept, unit) pair derives its own RNG stream
from (seed, concept, unit), so output is reproducible no matter how pairs
are scheduled.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Optional

from .core import (
    Condition,
    ConditionLexicon,
    Quantity,
    Sentence,
    UnitCatalog,
    decimal_str,
    plain_digits,
)
from .corpus import Collection
from .qindex import satisfies

ORIGIN_CENTRAL = "peak/mean"
ORIGIN_RANDOM = "random"
ORIGIN_EXPANDED = "expanded"

PROVENANCES = ("original", "unit_perm", "value_perm")
DEFAULT_STRATEGIES = ("original", "unit_perm")
DEFAULT_SAMPLES_PER_SIDE = 2

BIG_VALUE_THRESHOLD = Decimal(10) ** 6
WRITTEN_FORM_PROB = 0.5

_CONDITION_ORDER = (Condition.EQ, Condition.GT, Condition.LT)


@dataclass
class ConceptUnitEntry:
    """Value multiset and sentences for one (concept, unit) pair.

    values keeps duplicates: the same value seen in two sentences appears
    twice and drives the mode pick for EQ queries.
    """

    values: list[Decimal] = field(default_factory=list)
    sent_ids: list[str] = field(default_factory=list)


def build_concept_unit_index(
    collection: Collection,
) -> dict[tuple[str, str], ConceptUnitEntry]:
    """Group extracted quantities by (concept, unit).

    Quantities without a detected concept land under the empty concept,
    which query generation skips. Dimensionless quantities are not indexed;
    they cannot be rendered into query text.
    """
    index: dict[tuple[str, str], ConceptUnitEntry] = {}
    for sentence in collection.sentences:
        concept_by_quantity = dict()
        for concept, q_idx in collection.concepts_for(sentence.sent_id):
            concept_by_quantity[q_idx] = concept
        for q_idx, quantity in enumerate(sentence.quantities):
            if quantity.unit == "dimensionless":
                continue
            concept = concept_by_quantity.get(q_idx, "")
            entry = index.setdefault((concept, quantity.unit), ConceptUnitEntry())
            entry.values.append(quantity.value)
            if not entry.sent_ids or entry.sent_ids[-1] != sentence.sent_id:
                if sentence.sent_id not in entry.sent_ids:
                    entry.sent_ids.append(sentence.sent_id)
    return index


def _unit_values(sentence: Sentence, unit: str) -> list[Decimal]:
    return [q.value for q in sentence.quantities if q.unit == unit]


def split_by_condition(
    sent_ids: Iterable[str],
    collection: Collection,
    condition: Condition,
    value: Decimal,
    unit: str,
) -> tuple[list[str], list[str]]:
    """Positive iff at least one quantity with the query unit satisfies the
    condition; every other sentence is negative."""
    positives: list[str] = []
    negatives: list[str] = []
    for sid in sent_ids:
        sentence = collection.get(sid)
        if sentence is None:
            continue
        values = _unit_values(sentence, unit)
        if any(satisfies(condition, value, v) for v in values):
            positives.append(sid)
        else:
            negatives.append(sid)
    return positives, negatives


def select_query_value(
    values: list[Decimal],
    condition: Condition,
    sentence_values: Optional[list[list[Decimal]]] = None,
) -> Optional[Decimal]:
    """Pick the query value for a (concept, unit) pair.

    EQ takes the mode (ties to the smallest value). LT/GT take the observed
    value nearest the arithmetic mean that leaves at least one positive and
    one negative sentence, ties toward the smaller value; None when no value
    qualifies.
    """
    if not values:
        return None
    if condition is Condition.EQ:
        counts = Counter(values)
        best, _ = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
        return best
    mean = sum(values) / len(values)
    candidates = sorted(set(values), key=lambda v: (abs(v - mean), v))
    for candidate in candidates:
        if sentence_values is None:
            return candidate
        has_pos = any(
            any(satisfies(condition, candidate, v) for v in row)
            for row in sentence_values
        )
        has_neg = any(
            not any(satisfies(condition, candidate, v) for v in row)
            for row in sentence_values
        )
        if has_pos and has_neg:
            return candidate
    return None


def expand_concept(concept: str, expansions: Optional[dict]) -> list[str]:
    """Static-map concept expansion. The map is the pluggable seam: anything
    producing {concept: [alternates]} (an LLM client included) can feed it."""
    if not expansions:
        return []
    alternates = expansions.get(concept, ())
    return [a for a in alternates if a and a != concept]


@dataclass(frozen=True)
class GeneratedQuery:
    qid: str
    text: str
    concept: str
    condition: Condition
    value: Decimal
    unit: str
    origin: str
    # pair the samples are drawn from; differs from concept for expanded
    # queries, which reword the concept but keep the source sentences
    source_concept: str = ""

    def to_dict(self) -> dict:
        return {
            "qid": self.qid,
            "text": self.text,
            "concept": self.concept,
            "condition": self.condition.value,
            "value": decimal_str(self.value),
            "unit": self.unit,
            "origin": self.origin,
            "source_concept": self.source_concept or self.concept,
        }


def _pair_rng(seed: int, concept: str, unit: str, salt: str = "") -> random.Random:
    digest = hashlib.sha256(
        f"{seed}|{concept}|{unit}|{salt}".encode("utf-8")
    ).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _qid(concept: str, unit: str, condition: Condition, origin: str, value: Decimal) -> str:
    digest = hashlib.sha1(
        f"{concept}|{unit}|{condition.value}|{origin}|{decimal_str(value)}".encode("utf-8")
    ).hexdigest()
    return f"q{digest[:10]}"


def render_value(
    value: Decimal,
    rng: random.Random,
    threshold: Decimal = BIG_VALUE_THRESHOLD,
    written_prob: float = WRITTEN_FORM_PROB,
) -> str:
    """Textual form of a query value.

    Values at or above the threshold flip a coin between comma-grouped
    digits and a written composite ("10 million"). The written form is only
    used when it needs at most two decimals, so every rendering re-parses to
    the exact same decimal.
    """
    if abs(value) < threshold or value != value.to_integral_value():
        return plain_digits(value)
    if rng.random() < written_prob:
        for scale, word in ((Decimal(10) ** 9, "billion"), (Decimal(10) ** 6, "million")):
            if abs(value) >= scale:
                quotient = value / scale
                if quotient == quotient.quantize(Decimal("0.01")):
                    return f"{plain_digits(quotient.normalize())} {word}"
                break
    return f"{int(value):,}"


def render_query(
    concept: str,
    condition_surface: str,
    value_text: str,
    unit_surface: str,
    unit_is_prefix: bool,
) -> str:
    """Instantiate the query template
    "{concept} {condition} {unit_before}{value}{unit_after}"."""
    if unit_is_prefix:
        quantity_text = f"{unit_surface}{value_text}"
    else:
        quantity_text = f"{value_text} {unit_surface}"
    return f"{concept} {condition_surface} {quantity_text}"


def _admissible_values(
    entry: ConceptUnitEntry,
    condition: Condition,
    sentence_values: list[list[Decimal]],
) -> list[Decimal]:
    if condition is Condition.EQ:
        return sorted(set(entry.values))
    out = []
    for v in sorted(set(entry.values)):
        has_pos = any(
            any(satisfies(condition, v, x) for x in row) for row in sentence_values
        )
        has_neg = any(
            not any(satisfies(condition, v, x) for x in row) for row in sentence_values
        )
        if has_pos and has_neg:
            out.append(v)
    return out


def generate_queries(
    cu_index: dict[tuple[str, str], ConceptUnitEntry],
    collection: Collection,
    lexicon: ConditionLexicon,
    catalog: UnitCatalog,
    expansions: Optional[dict] = None,
    seed: int = 0,
    include_random: bool = True,
) -> tuple[list[GeneratedQuery], dict]:
    """Three queries per condition per pair: central value, random value,
    and one per concept alternate. Returns (queries, counters)."""
    queries: list[GeneratedQuery] = []
    counters = {"pairs": 0, "empty_concept_pairs": 0, "skipped_no_value": 0}

    def emit(concept, unit, condition, value, origin, rng, source_concept):
        surfaces = catalog.surfaces_of(unit)
        surface, is_prefix = rng.choice(surfaces)
        cond_surface = rng.choice(list(lexicon.surfaces(condition)))
        text = render_query(
            concept, cond_surface, render_value(value, rng), surface, is_prefix
        )
        queries.append(
            GeneratedQuery(
                qid=_qid(concept, unit, condition, origin, value),
                text=text,
                concept=concept,
                condition=condition,
                value=value,
                unit=unit,
                origin=origin,
                source_concept=source_concept,
            )
        )

    for (concept, unit) in sorted(cu_index):
        entry = cu_index[(concept, unit)]
        if not concept:
            counters["empty_concept_pairs"] += 1
            continue
        if catalog.get(unit) is None:
            continue
        counters["pairs"] += 1
        rng = _pair_rng(seed, concept, unit, "queries")
        sentence_values = [
            _unit_values(collection.get(sid), unit)
            for sid in entry.sent_ids
            if collection.get(sid) is not None
        ]
        alternates = expand_concept(concept, expansions)
        for condition in _CONDITION_ORDER:
            central = select_query_value(entry.values, condition, sentence_values)
            if central is None:
                counters["skipped_no_value"] += 1
            else:
                emit(concept, unit, condition, central, ORIGIN_CENTRAL, rng, concept)
            admissible = _admissible_values(entry, condition, sentence_values)
            if include_random and admissible:
                emit(
                    concept,
                    unit,
                    condition,
                    rng.choice(admissible),
                    ORIGIN_RANDOM,
                    rng,
                    concept,
                )
            for alternate in alternates:
                if not admissible:
                    continue
                emit(
                    alternate,
                    unit,
                    condition,
                    rng.choice(admissible),
                    ORIGIN_EXPANDED,
                    rng,
                    concept,
                )
    return queries, counters


@dataclass(frozen=True)
class SampleSentence:
    sent_id: str
    text: str
    provenance: str


@dataclass(frozen=True)
class TrainingTriple:
    qid: str
    query_text: str
    positive: SampleSentence
    negative: SampleSentence
    provenance: str

    def to_dict(self) -> dict:
        return {
            "qid": self.qid,
            "query": self.query_text,
            "positive": {
                "sent_id": self.positive.sent_id,
                "text": self.positive.text,
                "provenance": self.positive.provenance,
            },
            "negative": {
                "sent_id": self.negative.sent_id,
                "text": self.negative.text,
                "provenance": self.negative.provenance,
            },
            "provenance": self.provenance,
        }


def _rewrite_unit(
    sentence: Sentence, unit: str, new_surface: str, is_prefix: bool
) -> Optional[str]:
    """Re-render every quantity of the given unit with a new surface form.

    Prefix surfaces attach before the value, suffix surfaces follow it after
    a space. Right-to-left replacement keeps earlier spans valid.
    """
    targets = [q for q in sentence.quantities if q.unit == unit]
    if not targets or any(q.unit_span is None for q in targets):
        return None
    text = sentence.text
    for q in sorted(targets, key=lambda q: q.span[0], reverse=True):
        value_text = sentence.text[q.span[0] : q.span[1]]
        region = (
            min(q.span[0], q.unit_span[0]),
            max(q.span[1], q.unit_span[1]),
        )
        if is_prefix:
            rendered = f"{new_surface}{value_text}"
        else:
            rendered = f"{value_text} {new_surface}"
        text = text[: region[0]] + rendered + text[region[1] :]
    return text


def _rewrite_values(
    sentence: Sentence, replacements: dict[int, Decimal]
) -> str:
    """Replace value spans of selected quantities with plain-digit forms."""
    text = sentence.text
    for q_idx in sorted(replacements, key=lambda i: sentence.quantities[i].span[0], reverse=True):
        q = sentence.quantities[q_idx]
        text = text[: q.span[0]] + plain_digits(replacements[q_idx]) + text[q.span[1] :]
    return text


def _sample(rng: random.Random, items: list, n: int) -> list:
    """n draws without replacement, downsampled to the available count."""
    if n >= len(items):
        return list(items)
    return rng.sample(items, n)


def generate_samples(
    query: GeneratedQuery,
    entry: ConceptUnitEntry,
    collection: Collection,
    catalog: UnitCatalog,
    rng: random.Random,
    n: int = DEFAULT_SAMPLES_PER_SIDE,
    strategies: tuple[str, ...] = DEFAULT_STRATEGIES,
) -> tuple[dict[str, list[SampleSentence]], dict[str, list[SampleSentence]]]:
    """Positive and negative samples per strategy for one query."""
    positives: dict[str, list[SampleSentence]] = {}
    negatives: dict[str, list[SampleSentence]] = {}
    pos_ids, neg_ids = split_by_condition(
        entry.sent_ids, collection, query.condition, query.value, query.unit
    )

    if "original" in strategies:
        positives["original"] = [
            SampleSentence(sid, collection.get(sid).text, "original")
            for sid in _sample(rng, pos_ids, n)
        ]
        negatives["original"] = [
            SampleSentence(sid, collection.get(sid).text, "original")
            for sid in _sample(rng, neg_ids, n)
        ]

    if "unit_perm" in strategies:
        unit = catalog.get(query.unit)
        same_unit_surfaces = catalog.surfaces_of(query.unit)
        sibling_surfaces = [
            (surface, is_prefix)
            for sibling in catalog.family_members(unit.family)
            if sibling != query.unit
            for surface, is_prefix in catalog.surfaces_of(sibling)
        ]
        perm_pos: list[SampleSentence] = []
        for sid in _sample(rng, pos_ids, n):
            sentence = collection.get(sid)
            current = {
                sentence.text[q.unit_span[0] : q.unit_span[1]].casefold()
                for q in sentence.quantities
                if q.unit == query.unit and q.unit_span is not None
            }
            options = [
                (s, p) for s, p in same_unit_surfaces if s.casefold() not in current
            ]
            if not options:
                continue
            surface, is_prefix = rng.choice(options)
            text = _rewrite_unit(sentence, query.unit, surface, is_prefix)
            if text is not None:
                perm_pos.append(SampleSentence(sid, text, "unit_perm"))
        perm_neg: list[SampleSentence] = []
        if sibling_surfaces:
            for sid in _sample(rng, pos_ids, n):
                sentence = collection.get(sid)
                surface, is_prefix = rng.choice(sibling_surfaces)
                text = _rewrite_unit(sentence, query.unit, surface, is_prefix)
                if text is not None:
                    perm_neg.append(SampleSentence(sid, text, "unit_perm"))
        positives["unit_perm"] = perm_pos
        negatives["unit_perm"] = perm_neg

    if "value_perm" in strategies:
        satisfying = [v for v in entry.values if satisfies(query.condition, query.value, v)]
        violating = [v for v in entry.values if not satisfies(query.condition, query.value, v)]
        perm_pos = []
        if satisfying:
            for sid in _sample(rng, neg_ids, n):
                sentence = collection.get(sid)
                indices = [
                    i for i, q in enumerate(sentence.quantities) if q.unit == query.unit
                ]
                if not indices:
                    continue
                target = rng.choice(indices)
                text = _rewrite_values(sentence, {target: rng.choice(satisfying)})
                perm_pos.append(SampleSentence(sid, text, "value_perm"))
        perm_neg = []
        if violating:
            for sid in _sample(rng, pos_ids, n):
                sentence = collection.get(sid)
                replacements = {
                    i: rng.choice(violating)
                    for i, q in enumerate(sentence.quantities)
                    if q.unit == query.unit
                    and satisfies(query.condition, query.value, q.value)
                }
                if not replacements:
                    continue
                text = _rewrite_values(sentence, replacements)
                perm_neg.append(SampleSentence(sid, text, "value_perm"))
        positives["value_perm"] = perm_pos
        negatives["value_perm"] = perm_neg

    return positives, negatives


def aggregate_samples(
    query: GeneratedQuery,
    positives: dict[str, list[SampleSentence]],
    negatives: dict[str, list[SampleSentence]],
) -> list[TrainingTriple]:
    """Pair each positive with a negative, same provenance first.

    Leftover positives take negatives round-robin from the other strategies;
    a triple is tagged with its positive's provenance.
    """
    triples: list[TrainingTriple] = []
    leftover_pos: list[SampleSentence] = []
    leftover_neg: list[SampleSentence] = []
    for provenance in PROVENANCES:
        ps = positives.get(provenance, [])
        ns = negatives.get(provenance, [])
        for p, neg in zip(ps, ns):
            triples.append(TrainingTriple(query.qid, query.text, p, neg, provenance))
        if len(ps) > len(ns):
            leftover_pos.extend(ps[len(ns) :])
        else:
            leftover_neg.extend(ns[len(ps) :])
    for i, p in enumerate(leftover_pos):
        if not leftover_neg:
            break
        neg = leftover_neg[i % len(leftover_neg)]
        triples.append(TrainingTriple(query.qid, query.text, p, neg, p.provenance))
    return triples


def run_datagen(
    collection: Collection,
    catalog: UnitCatalog,
    lexicon: ConditionLexicon,
    expansions: Optional[dict] = None,
    seed: int = 0,
    n: int = DEFAULT_SAMPLES_PER_SIDE,
    strategies: tuple[str, ...] = DEFAULT_STRATEGIES,
    include_random: bool = True,
) -> tuple[list[GeneratedQuery], list[TrainingTriple], dict]:
    """Full pipeline: concept/unit index -> queries -> training triples."""
    for strategy in strategies:
        if strategy not in PROVENANCES:
            raise ValueError(f"unknown sampling strategy {strategy!r}")
    cu_index = build_concept_unit_index(collection)
    queries, counters = generate_queries(
        cu_index,
        collection,
        lexicon,
        catalog,
        expansions=expansions,
        seed=seed,
        include_random=include_random,
    )
    triples: list[TrainingTriple] = []
    per_provenance = Counter()
    for query in queries:
        entry = cu_index.get((query.source_concept or query.concept, query.unit))
        if entry is None:
            continue
        rng = _pair_rng(
            seed,
            query.source_concept or query.concept,
            query.unit,
            f"samples|{query.condition.value}|{query.origin}|{decimal_str(query.value)}",
        )
        positives, negatives = generate_samples(
            query, entry, collection, catalog, rng, n=n, strategies=strategies
        )
        new_triples = aggregate_samples(query, positives, negatives)
        triples.extend(new_triples)
        per_provenance.update(t.provenance for t in new_triples)
    counters["queries"] = len(queries)
    counters["triples"] = len(triples)
    counters["triples_by_provenance"] = dict(sorted(per_provenance.items()))
    return queries, triples, counters


def verify_triple_side(
    text: str,
    condition: Condition,
    value: Decimal,
    unit: str,
    catalog: UnitCatalog,
    expect_positive: bool,
) -> bool:
    """Re-extract a sample text and check its label still holds."""
    from .extract import extract_sentence

    extraction = extract_sentence(text, catalog)
    values = [q.value for q in extraction.quantities if q.unit == unit]
    is_positive = any(satisfies(condition, value, v) for v in values)
    return is_positive == expect_positive


def verify_triples(
    triples: list[TrainingTriple],
    queries: list[GeneratedQuery],
    catalog: UnitCatalog,
) -> dict:
    """Validity report: fraction of sample sentences whose re-extracted
    label matches their side of the triple."""
    by_qid = {q.qid: q for q in queries}
    checked = 0
    valid = 0
    failures: list[dict] = []
    for triple in triples:
        query = by_qid.get(triple.qid)
        if query is None:
            continue
        for sample, expect_positive in ((triple.positive, True), (triple.negative, False)):
            checked += 1
            ok = verify_triple_side(
                sample.text,
                query.condition,
                query.value,
                query.unit,
                catalog,
                expect_positive,
            )
            if ok:
                valid += 1
            else:
                failures.append(
                    {
                        "qid": triple.qid,
                        "sent_id": sample.sent_id,
                        "text": sample.text,
                        "expected": "positive" if expect_positive else "negative",
                        "provenance": sample.provenance,
                    }
                )
    return {
        "checked": checked,
        "valid": valid,
        "validity": (valid / checked) if checked else 1.0,
        "failures": failures,
    }


def write_queries_jsonl(path, queries: list[GeneratedQuery]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for query in queries:
            fh.write(json.dumps(query.to_dict(), sort_keys=True) + "\n")


def write_triples_jsonl(path, triples: list[TrainingTriple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for triple in triples:
            fh.write(json.dumps(triple.to_dict(), sort_keys=True) + "\n")
