"""Command line surface tying the pipeline together.

Every command is deterministic given its inputs, the seed and the resolved
configuration; the configuration is embedded as a '#' JSON header in run
files for provenance. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .core import (
    CatalogError,
    Condition,
    DataError,
    decimal_str,
    default_catalog,
    default_conditions,
    default_expansions,
    load_catalog,
    load_conditions,
)
from .corpus import load_corpus, load_index_file, save_index_file
from .datagen import (
    DEFAULT_SAMPLES_PER_SIDE,
    DEFAULT_STRATEGIES,
    PROVENANCES,
    run_datagen,
    verify_triples,
    write_queries_jsonl,
    write_triples_jsonl,
)
from .evaluation import (
    METRIC_KEYS,
    evaluate_run,
    format_metrics,
    latency_summary,
    mask_corpus,
    permutation_test,
    read_qrels,
)
from .extract import parse_query
from .qindex import DEFAULT_PHI, PHI_SETS, build_quantity_index, get_phi_set
from .rankers import (
    DEFAULT_ALPHA,
    read_run,
    rerank_external,
    search_bm25,
    search_bm25_filter,
    search_qbm25,
    write_run,
)
from .tindex import DEFAULT_B, DEFAULT_CUTOFF, DEFAULT_K1, build_term_index

log = logging.getLogger("quantrank")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

RANKERS = ("bm25", "bm25-filter", "qbm25")

# keys a --config file may supply; flags given on the command line win
CONFIG_KEYS = (
    "k1",
    "b",
    "alpha",
    "cutoff",
    "k",
    "phi",
    "ranker",
    "samples",
    "strategies",
    "iterations",
    "metric",
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here reserves 2 for
    data errors, so usage failures exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Global flags work before or after the subcommand name.

    The subcommand copies use SUPPRESS defaults so they override the
    top-level values only when actually given.
    """
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="JSON file with default parameters")
    parser.add_argument("--seed", type=int, default=d, help="global seed")
    parser.add_argument("--catalog", default=d, help="unit catalog JSON (default: bundled)")
    parser.add_argument(
        "--conditions",
        default=d,
        help="condition surface dictionary JSON (default: bundled)",
    )
    parser.add_argument(
        "-q",
        "--quiet",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="suppress warnings",
    )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="quantrank",
        description="Quantity-aware sentence retrieval: build, search, "
        "generate training data, evaluate.",
    )
    _add_global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_command(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        _add_global_flags(p, suppress=True)
        return p

    p = add_command("build", help="extract a corpus into an index file")
    p.add_argument("corpus", help="JSONL corpus ({doc_id,text} or {sent_id,text})")
    p.add_argument("--out", required=True, help="index file to write")
    p.set_defaults(func=cmd_build)

    p = add_command("search", help="run one query against an index")
    p.add_argument("index", help="index file from `quantrank build`")
    p.add_argument("query", help="query text")
    p.add_argument("--ranker", choices=RANKERS, default=None)
    p.add_argument("--k", type=int, default=None, help="results to print (10)")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--phi", choices=sorted(PHI_SETS), default=None)
    p.add_argument(
        "--format", choices=("text", "trec"), default="text", dest="out_format"
    )
    p.add_argument("--tag", default="quantrank")
    p.set_defaults(func=cmd_search)

    p = add_command("batch-search", help="run a query file, write a TREC run")
    p.add_argument("index")
    p.add_argument("queries", help="JSONL with qid and text fields")
    p.add_argument("--run", required=True, help="output run file")
    p.add_argument("--ranker", choices=RANKERS, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--phi", choices=sorted(PHI_SETS), default=None)
    p.add_argument("--tag", default="quantrank")
    p.set_defaults(func=cmd_batch_search)

    p = add_command("rerank", help="add quantity scores onto an external run")
    p.add_argument("index")
    p.add_argument("run", help="input TREC run (optional match=0|1 column)")
    p.add_argument("queries", help="JSONL with qid and text fields")
    p.add_argument("--out", required=True, help="output run file")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--mode", choices=("topk", "gated"), default="topk")
    p.add_argument("--phi", choices=sorted(PHI_SETS), default=None)
    p.add_argument("--tag", default="quantrank-rerank")
    p.set_defaults(func=cmd_rerank)

    p = add_command("datagen", help="generate queries and training triples")
    p.add_argument("index")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--samples", type=int, default=None, help="draws per side (2)")
    p.add_argument(
        "--strategies",
        default=None,
        help="comma list from: " + ",".join(PROVENANCES),
    )
    p.add_argument("--no-random", action="store_true", help="skip random-value queries")
    p.add_argument("--expansions", help="concept expansion JSON map")
    p.add_argument("--no-verify", action="store_true", help="skip re-extraction check")
    p.set_defaults(func=cmd_datagen)

    p = add_command("eval", help="score a run file against qrels")
    p.add_argument("run")
    p.add_argument("qrels")
    p.add_argument("--per-query", action="store_true")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_eval)

    p = add_command(
        "significance", help="paired permutation test between two runs"
    )
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--qrels", required=True)
    p.add_argument("--metric", choices=METRIC_KEYS, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(func=cmd_significance)

    p = add_command("mask", help="write a corpus with value or unit spans masked")
    p.add_argument("index")
    p.add_argument("--mode", choices=("value", "unit"), required=True)
    p.add_argument("--out", required=True, help="output JSONL corpus")
    p.set_defaults(func=cmd_mask)

    return parser


def _load_config(args) -> dict:
    if not args.config:
        return {}
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config {args.config} is not valid JSON: {exc.msg}") from exc
    if not isinstance(config, dict):
        raise DataError(f"config {args.config} must be a JSON object")
    for key in config:
        if key not in CONFIG_KEYS and key != "seed":
            log.warning("config: ignoring unknown key %r", key)
    return config


def _resolve(args, config: dict, name: str, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _load_catalog_lexicon(args):
    catalog = load_catalog(args.catalog) if args.catalog else default_catalog()
    lexicon = (
        load_conditions(args.conditions) if args.conditions else default_conditions()
    )
    return catalog, lexicon


def _load_indexes(args, config):
    collection, params = load_index_file(args.index)
    k1 = float(_resolve(args, config, "k1", DEFAULT_K1))
    b = float(_resolve(args, config, "b", DEFAULT_B))
    tindex = build_term_index(collection.sentences, k1=k1, b=b)
    qindex = build_quantity_index(collection.sentences)
    return collection, tindex, qindex, params, {"k1": k1, "b": b}


def _read_queries_file(path) -> list[tuple[str, str]]:
    """(qid, text) pairs from a JSONL query file."""
    from .corpus import iter_jsonl

    out = []
    for lineno, record in iter_jsonl(path):
        if "text" not in record:
            raise DataError(f"{path}:{lineno}: query record has no text field")
        qid = str(record.get("qid", f"q{lineno}"))
        out.append((qid, record["text"]))
    return out


def _search_fn(ranker: str, tindex, qindex, alpha: float, cutoff: int, phi_set):
    if ranker == "bm25":
        return lambda query: search_bm25(tindex, query, cutoff)
    if ranker == "bm25-filter":
        return lambda query: search_bm25_filter(tindex, qindex, query, cutoff)
    return lambda query: search_qbm25(
        tindex, qindex, query, alpha=alpha, cutoff=cutoff, phi_set=phi_set
    )


def cmd_build(args, config) -> int:
    catalog, _ = _load_catalog_lexicon(args)
    collection = load_corpus(args.corpus, catalog)
    n_quantities = sum(len(s.quantities) for s in collection.sentences)
    units = {q.unit for s in collection.sentences for q in s.quantities}
    params = {
        "catalog": args.catalog or "builtin",
        "conditions": args.conditions or "builtin",
        "corpus": str(args.corpus),
    }
    save_index_file(args.out, collection, params)
    print(
        f"indexed {len(collection)} sentences, {n_quantities} quantities, "
        f"{len(units)} distinct units -> {args.out}"
    )
    return EXIT_OK


def cmd_search(args, config) -> int:
    catalog, lexicon = _load_catalog_lexicon(args)
    collection, tindex, qindex, _, bm25_params = _load_indexes(args, config)
    ranker = _resolve(args, config, "ranker", "qbm25")
    if ranker not in RANKERS:
        raise DataError(f"config: unknown ranker {ranker!r}")
    alpha = float(_resolve(args, config, "alpha", DEFAULT_ALPHA))
    cutoff = int(_resolve(args, config, "cutoff", DEFAULT_CUTOFF))
    k = int(_resolve(args, config, "k", 10))
    phi_set = get_phi_set(_resolve(args, config, "phi", DEFAULT_PHI))
    query = parse_query(args.query, catalog, lexicon, qid="cli")
    results = _search_fn(ranker, tindex, qindex, alpha, cutoff, phi_set)(query)[:k]

    if args.out_format == "trec":
        for rank, r in enumerate(results, start=1):
            print(f"cli Q0 {r.sent_id} {rank} {r.score:.6f} {args.tag}")
        return EXIT_OK

    if query.has_quantity:
        print(
            f"parsed: terms={list(query.terms)} condition={query.condition.value} "
            f"value={decimal_str(query.quantity.value)} unit={query.quantity.unit}"
        )
    else:
        print(f"parsed: terms={list(query.terms)} (term-only)")
    if not results:
        print("no results")
        return EXIT_OK
    for rank, r in enumerate(results, start=1):
        sentence = collection.get(r.sent_id)
        text = sentence.text if sentence else ""
        print(
            f"{rank:>3}. {r.sent_id}  score={r.score:.4f} "
            f"(term={r.term_score:.4f}, qs={r.quantity_score:.4f})"
        )
        print(f"     {text}")
    return EXIT_OK


def cmd_batch_search(args, config) -> int:
    catalog, lexicon = _load_catalog_lexicon(args)
    _, tindex, qindex, _, bm25_params = _load_indexes(args, config)
    ranker = _resolve(args, config, "ranker", "qbm25")
    if ranker not in RANKERS:
        raise DataError(f"config: unknown ranker {ranker!r}")
    alpha = float(_resolve(args, config, "alpha", DEFAULT_ALPHA))
    cutoff = int(_resolve(args, config, "cutoff", DEFAULT_CUTOFF))
    phi_name = _resolve(args, config, "phi", DEFAULT_PHI)
    search = _search_fn(ranker, tindex, qindex, alpha, cutoff, get_phi_set(phi_name))

    runs = {}
    durations = []
    for qid, text in _read_queries_file(args.queries):
        query = parse_query(text, catalog, lexicon, qid=qid)
        started = time.perf_counter()
        runs[qid] = search(query)
        durations.append((time.perf_counter() - started) * 1000.0)
    header = {
        "ranker": ranker,
        "alpha": alpha,
        "cutoff": cutoff,
        "phi": phi_name,
        **bm25_params,
        "index": str(args.index),
        "queries": str(args.queries),
    }
    write_run(args.run, runs, args.tag, header=header)
    stats = latency_summary(durations)
    print(
        f"wrote {sum(len(v) for v in runs.values())} rows for {len(runs)} queries "
        f"-> {args.run}"
    )
    print(
        "latency: mean {mean_ms:.2f} ms, p95 {p95_ms:.2f} ms over {n} queries".format(
            **stats
        )
    )
    return EXIT_OK


def cmd_rerank(args, config) -> int:
    catalog, lexicon = _load_catalog_lexicon(args)
    _, _, qindex, _, _ = _load_indexes(args, config)
    alpha = float(_resolve(args, config, "alpha", DEFAULT_ALPHA))
    phi_name = _resolve(args, config, "phi", DEFAULT_PHI)
    phi_set = get_phi_set(phi_name)
    texts = dict(_read_queries_file(args.queries))
    incoming = read_run(args.run)
    runs = {}
    for qid, entries in incoming.items():
        text = texts.get(qid)
        if text is None:
            log.warning("rerank: no query text for qid %s, skipping", qid)
            continue
        query = parse_query(text, catalog, lexicon, qid=qid)
        runs[qid] = rerank_external(
            entries, qindex, query, alpha=alpha, mode=args.mode, phi_set=phi_set
        )
    header = {
        "alpha": alpha,
        "mode": args.mode,
        "phi": phi_name,
        "input_run": str(args.run),
        "index": str(args.index),
    }
    write_run(args.out, runs, args.tag, header=header)
    print(f"reranked {len(runs)} queries -> {args.out}")
    return EXIT_OK


def cmd_datagen(args, config) -> int:
    catalog, lexicon = _load_catalog_lexicon(args)
    collection, _ = load_index_file(args.index)
    seed = int(args.seed if args.seed is not None else config.get("seed", 0))
    samples = int(_resolve(args, config, "samples", DEFAULT_SAMPLES_PER_SIDE))
    raw = _resolve(args, config, "strategies", ",".join(DEFAULT_STRATEGIES))
    strategies = tuple(s.strip() for s in str(raw).split(",") if s.strip())
    for strategy in strategies:
        if strategy not in PROVENANCES:
            raise DataError(f"unknown strategy {strategy!r}")
    if args.expansions:
        try:
            with open(args.expansions, "r", encoding="utf-8") as fh:
                expansions = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read expansions {args.expansions}: {exc}") from exc
    else:
        expansions = default_expansions()

    queries, triples, counters = run_datagen(
        collection,
        catalog,
        lexicon,
        expansions=expansions,
        seed=seed,
        n=samples,
        strategies=strategies,
        include_random=not args.no_random,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_queries_jsonl(out / "queries.jsonl", queries)
    write_triples_jsonl(out / "triples.jsonl", triples)
    print(
        f"pairs={counters['pairs']} queries={counters['queries']} "
        f"triples={counters['triples']} skipped_no_value={counters['skipped_no_value']}"
    )
    for provenance, count in counters["triples_by_provenance"].items():
        print(f"  {provenance}: {count}")
    if not args.no_verify:
        report = verify_triples(triples, queries, catalog)
        print(
            f"re-extraction validity: {report['valid']}/{report['checked']} "
            f"({report['validity']:.4f})"
        )
        if report["failures"]:
            for failure in report["failures"][:5]:
                log.warning("invalid sample: %s", failure)
    return EXIT_OK


def _run_rankings(path) -> dict[str, list[str]]:
    return {
        qid: [entry.sent_id for entry in entries]
        for qid, entries in read_run(path).items()
    }


def cmd_eval(args, config) -> int:
    qrels = read_qrels(args.qrels)
    metrics = evaluate_run(_run_rankings(args.run), qrels)
    if args.json:
        print(json.dumps(metrics.to_dict(), sort_keys=True, indent=2))
    else:
        print(format_metrics(metrics, per_query=args.per_query))
    return EXIT_OK


def cmd_significance(args, config) -> int:
    qrels = read_qrels(args.qrels)
    metric = _resolve(args, config, "metric", "mrr@10")
    iterations = int(_resolve(args, config, "iterations", 10000))
    seed = int(args.seed if args.seed is not None else config.get("seed", 0))
    metrics_a = evaluate_run(_run_rankings(args.run_a), qrels)
    metrics_b = evaluate_run(_run_rankings(args.run_b), qrels)
    scores_a = {qid: row[metric] for qid, row in metrics_a.per_query.items()}
    scores_b = {qid: row[metric] for qid, row in metrics_b.per_query.items()}
    p_value = permutation_test(scores_a, scores_b, iterations=iterations, seed=seed)
    for key in METRIC_KEYS:
        print(
            f"{key:>8}: {metrics_a.means[key]:.4f} vs {metrics_b.means[key]:.4f} "
            f"(diff {metrics_a.means[key] - metrics_b.means[key]:+.4f})"
        )
    print(f"permutation test on {metric} ({iterations} iterations): p = {p_value:.6f}")
    return EXIT_OK


def cmd_mask(args, config) -> int:
    collection, _ = load_index_file(args.index)
    masked = mask_corpus(collection, args.mode)
    with open(args.out, "w", encoding="utf-8") as fh:
        for sentence in masked.sentences:
            record = {
                "sent_id": sentence.sent_id,
                "doc_id": sentence.doc_id,
                "text": sentence.text,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"masked {len(masked)} sentences (mode={args.mode}) -> {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _load_config(args)
        return args.func(args, config)
    except (DataError, CatalogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
