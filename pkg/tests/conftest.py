"""Shared fixtures: bundled catalog/lexicon and two small hand corpora."""

import pytest

from quantrank.core import default_catalog, default_conditions
from quantrank.corpus import build_collection

# One (concept, unit) pair with the value multiset
# [0.9, 1.4, 17, 17, 22, 26, 35, 84]: mean 25.4125, mode 17. The first
# sentence carries two quantities; 17 appears in two sentences.
CENT_SENTENCES = [
    "The cannabis company lost 0.9 of a cent per share, better than the "
    "1.4 cents per share it lost a year ago.",
    "The cannabis company earned 17 cents per share in March.",
    "The cannabis company posted 17 cents per share for Q2.",
    "The cannabis company reported 22 cents per share.",
    "The cannabis company announced 26 cents per share.",
    "The cannabis company delivered 35 cents per share.",
    "The cannabis company hit 84 cents per share.",
]

LAPTOP_VALUES = (850, 899, 950, 700)


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def lexicon():
    return default_conditions()


@pytest.fixture(scope="session")
def cent_collection(catalog):
    records = [
        {"sent_id": f"s{i}", "text": text}
        for i, text in enumerate(CENT_SENTENCES, start=1)
    ]
    return build_collection(records, catalog)


@pytest.fixture(scope="session")
def laptop_collection(catalog):
    # identical token layout so plain BM25 ties all four sentences
    records = [
        {"sent_id": f"l{v}", "text": f"The Acme laptop costs {v} dollars."}
        for v in LAPTOP_VALUES
    ]
    return build_collection(records, catalog)
