"""Synthetic corpus and benchmark generator.

Produces a fully deterministic product-style corpus: capitalized two-token
product names, one unit per product, integer values on a small grid with a
repeated mode, and quantity-free filler sentences that share the product
tokens. Benchmarks built on top pick query values with the same selection
rules the training data generator uses, so relevance labels follow directly
from the extracted quantities.
"""

from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal

from .core import (
    Condition,
    ConditionLexicon,
    UnitCatalog,
    default_catalog,
    default_conditions,
    plain_digits,
)
from .corpus import Collection, build_collection
from .datagen import (
    GeneratedQuery,
    _pair_rng,
    build_concept_unit_index,
    render_query,
    select_query_value,
    split_by_condition,
)

FIRST_WORDS = (
    "Aurora Basalt Cobalt Drift Ember Falcon Garnet Harbor Indigo Juniper "
    "Krypton Lumen Meadow Nimbus Onyx Pioneer Quartz Raven Sierra Tundra "
    "Velvet Willow Zephyr Atlas Borealis"
).split()

SECOND_WORDS = (
    "Phone Laptop Tablet Camera Drone Monitor Speaker Router Charger "
    "Keyboard Headset Scooter Console Printer Projector"
).split()

# unit, fixed corpus surface, prefix flag, template family
UNIT_PLAN = (
    ("dollar", "dollars", False, "currency"),
    ("euro", "euros", False, "currency"),
    ("pound-sterling", "pounds", False, "currency"),
    ("kilogram", "kg", False, "mass"),
    ("gigabyte", "GB", False, "data"),
    ("percent", "percent", False, "percent"),
    ("horsepower", "hp", False, "power"),
    ("kilometer-per-hour", "km/h", False, "speed"),
    ("dollar", "$", True, "currency"),
)

# Verbs come from the extractor's skip lexicon so the product name stays the
# nearest concept run left of the value.
TEMPLATES = {
    "currency": (
        "{c} costs {q}.",
        "The {c} retails at {q}.",
        "{c} sells for {q}.",
        "The {c} now costs {q}.",
    ),
    "mass": (
        "{c} weighs {q}.",
        "The {c} weighs {q} with the case.",
        "{c} now weighs {q}.",
        "The {c} weighs roughly {q}.",
    ),
    "data": (
        "{c} stores {q}.",
        "The {c} holds {q} of data.",
        "{c} ships {q} of storage.",
        "The {c} now stores {q}.",
    ),
    "percent": (
        "{c} rose {q} in March.",
        "{c} gained {q} this quarter.",
        "The {c} rose {q}.",
        "{c} gained {q} overall.",
    ),
    "power": (
        "{c} delivers {q}.",
        "The {c} makes {q}.",
        "{c} now delivers {q}.",
        "The {c} delivers {q} of output.",
    ),
    "speed": (
        "{c} reaches {q}.",
        "The {c} tops {q} on test runs.",
        "{c} hits {q}.",
        "The {c} reaches {q} downhill.",
    ),
}

FILLER = (
    "Analysts discussed the {c} during the expo.",
    "Reviewers praised the {c} in a detailed writeup.",
    "Retailers restocked the {c} after strong demand.",
    "Shoppers compared the {c} against rival offerings.",
)

DISTINCT_VALUES = 10
MODE_EXTRA = 2
FILLER_PER_CONCEPT = 4


def _quantity_text(value: Decimal, surface: str, is_prefix: bool) -> str:
    if is_prefix:
        return f"{surface}{plain_digits(value)}"
    return f"{plain_digits(value)} {surface}"


def make_corpus_records(seed: int = 0, n_concepts: int = 130) -> list[dict]:
    """Document records ({doc_id, text}), one document per product."""
    combos = [f"{a} {b}" for a in FIRST_WORDS for b in SECOND_WORDS]
    if n_concepts > len(combos):
        raise ValueError(f"at most {len(combos)} concepts available")
    rng = _pair_rng(seed, "", "", "synth-concepts")
    concepts = rng.sample(combos, n_concepts)

    records = []
    for i, concept in enumerate(concepts):
        unit, surface, is_prefix, family = UNIT_PLAN[i % len(UNIT_PLAN)]
        crng = _pair_rng(seed, concept, unit, "synth-doc")
        step = crng.choice([3, 5, 10])
        start = crng.randrange(20, 400)
        values = [Decimal(start + j * step) for j in range(DISTINCT_VALUES)]
        mode = values[crng.randrange(1, DISTINCT_VALUES - 1)]
        draws = values + [mode] * MODE_EXTRA
        templates = TEMPLATES[family]
        sentences = [
            templates[j % len(templates)].format(
                c=concept, q=_quantity_text(value, surface, is_prefix)
            )
            for j, value in enumerate(draws)
        ]
        sentences.extend(f.format(c=concept) for f in FILLER[:FILLER_PER_CONCEPT])
        crng.shuffle(sentences)
        doc_id = concept.casefold().replace(" ", "-")
        records.append({"doc_id": doc_id, "text": " ".join(sentences)})
    return records


def make_benchmark(
    seed: int = 0,
    n_concepts: int = 130,
    per_condition: int = 20,
    catalog: UnitCatalog | None = None,
    lexicon: ConditionLexicon | None = None,
) -> tuple[list[dict], Collection, list[GeneratedQuery], dict[str, set[str]]]:
    """Corpus records plus queries and qrels.

    Query values follow the central-value selection rule; relevance is
    membership among the concept's sentences that satisfy the condition.
    Returns (records, collection, queries, qrels).
    """
    catalog = catalog or default_catalog()
    lexicon = lexicon or default_conditions()
    records = make_corpus_records(seed, n_concepts)
    collection = build_collection(records, catalog)
    cu_index = build_concept_unit_index(collection)

    pairs = sorted(
        (concept, unit)
        for (concept, unit), entry in cu_index.items()
        if concept and len(entry.sent_ids) >= DISTINCT_VALUES
    )
    rng = _pair_rng(seed, "", "", "synth-benchmark")
    if per_condition > len(pairs):
        raise ValueError(f"only {len(pairs)} usable concept/unit pairs")
    selected = rng.sample(pairs, per_condition)

    queries: list[GeneratedQuery] = []
    qrels: dict[str, set[str]] = {}
    for condition in (Condition.EQ, Condition.LT, Condition.GT):
        for concept, unit in selected:
            entry = cu_index[(concept, unit)]
            sentence_values = [
                [q.value for q in collection.get(sid).quantities if q.unit == unit]
                for sid in entry.sent_ids
            ]
            value = select_query_value(entry.values, condition, sentence_values)
            if value is None:
                continue
            positives, _ = split_by_condition(
                entry.sent_ids, collection, condition, value, unit
            )
            if not positives:
                continue
            qrng = _pair_rng(seed, concept, unit, f"synth-query|{condition.value}")
            surface, is_prefix = qrng.choice(catalog.surfaces_of(unit))
            cond_surface = qrng.choice(list(lexicon.surfaces(condition)))
            text = render_query(
                concept, cond_surface, plain_digits(value), surface, is_prefix
            )
            qid = f"{condition.value}-{concept.casefold().replace(' ', '-')}"
            queries.append(
                GeneratedQuery(
                    qid=qid,
                    text=text,
                    concept=concept,
                    condition=condition,
                    value=value,
                    unit=unit,
                    origin="peak/mean",
                    source_concept=concept,
                )
            )
            qrels[qid] = set(positives)
    return records, collection, queries, qrels


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quantrank-synth",
        description="Write a synthetic corpus, queries and qrels for demos.",
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--concepts", type=int, default=130)
    parser.add_argument("--per-condition", type=int, default=20)
    args = parser.parse_args(argv)

    import pathlib

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records, _, queries, qrels = make_benchmark(
        seed=args.seed, n_concepts=args.concepts, per_condition=args.per_condition
    )
    with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    with open(out / "queries.jsonl", "w", encoding="utf-8") as fh:
        for query in queries:
            fh.write(json.dumps(query.to_dict(), sort_keys=True) + "\n")
    with open(out / "qrels.txt", "w", encoding="utf-8") as fh:
        for qid in sorted(qrels):
            for sid in sorted(qrels[qid]):
                fh.write(f"{qid} 0 {sid} 1\n")
    print(
        f"wrote {len(records)} documents, {len(queries)} queries, "
        f"{sum(len(v) for v in qrels.values())} qrels rows to {out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
