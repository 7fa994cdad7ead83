"""Quantity-aware sentence retrieval.

Sentences are the retrieval unit; queries carry search terms plus an
optional numerical condition over a (value, unit) pair. Ranking fuses
normalized BM25 with a condition-dependent quantity proximity score, and a
seeded generator turns any corpus into queries and contrastive training
triples.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .core import (
    CatalogError,
    Condition,
    ConditionLexicon,
    DataError,
    Quantity,
    QuantityQuery,
    Sentence,
    Unit,
    UnitCatalog,
    default_catalog,
    default_conditions,
    default_expansions,
    load_catalog,
    load_conditions,
    validate_catalog,
)
from .corpus import (
    Collection,
    build_collection,
    load_corpus,
    load_index_file,
    save_index_file,
    split_sentences,
)
from .datagen import (
    GeneratedQuery,
    TrainingTriple,
    build_concept_unit_index,
    generate_queries,
    run_datagen,
    select_query_value,
    split_by_condition,
    verify_triples,
)
from .evaluation import (
    evaluate_run,
    mask_corpus,
    mrr_at,
    ndcg_at,
    permutation_test,
    precision_at,
    read_qrels,
    recall_at,
)
from .extract import extract_sentence, parse_query
from .qindex import (
    PhiSet,
    QuantityIndex,
    build_quantity_index,
    convert_value,
    get_phi_set,
    phi_equal,
    phi_greater,
    phi_less,
    quantity_score,
    register_phi_set,
    satisfies,
)
from .rankers import (
    RunEntry,
    ScoredResult,
    read_run,
    rerank_external,
    search_bm25,
    search_bm25_filter,
    search_qbm25,
    write_run,
)
from .tindex import TermIndex, build_term_index

__version__ = "0.1.0"

__all__ = [
    "CatalogError",
    "Collection",
    "Condition",
    "ConditionLexicon",
    "DataError",
    "GeneratedQuery",
    "KERNEL_BACKEND",
    "PhiSet",
    "Quantity",
    "QuantityIndex",
    "QuantityQuery",
    "RunEntry",
    "ScoredResult",
    "Sentence",
    "TermIndex",
    "TrainingTriple",
    "Unit",
    "UnitCatalog",
    "build_collection",
    "build_concept_unit_index",
    "build_quantity_index",
    "build_term_index",
    "convert_value",
    "default_catalog",
    "default_conditions",
    "default_expansions",
    "evaluate_run",
    "extract_sentence",
    "generate_queries",
    "get_phi_set",
    "load_catalog",
    "load_conditions",
    "load_corpus",
    "load_index_file",
    "mask_corpus",
    "mrr_at",
    "ndcg_at",
    "parse_query",
    "permutation_test",
    "phi_equal",
    "phi_greater",
    "phi_less",
    "precision_at",
    "quantity_score",
    "read_qrels",
    "read_run",
    "recall_at",
    "register_phi_set",
    "rerank_external",
    "run_datagen",
    "satisfies",
    "save_index_file",
    "search_bm25",
    "search_bm25_filter",
    "search_qbm25",
    "select_query_value",
    "split_by_condition",
    "split_sentences",
    "verify_triples",
    "write_run",
    "__version__",
]
