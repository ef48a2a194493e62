"""Command-line entry point: ``semtree {build-tree,search,eval,simulate}``.

Every option can also come from a JSON file given with ``--config``;
explicit flags win over the file, which wins over built-in defaults. Each run
writes the fully resolved settings to ``<out-dir>/config.json`` so that
``--config <out-dir>/config.json`` reproduces it.

Exit codes: 0 success, 2 usage error, 3 model/backend failure, 4 bad input data.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Callable

from . import __version__
from .construction import (
    BuildManifest,
    ConstructionError,
    LlmSummarizer,
    MultiLevelSummary,
    build_bottom_up,
    build_top_down,
    metadata_initial_clusters,
)
from .eval import EvalBundle, Query, cost_curve_tsv, emit_cost_curve, oracle_factory, relevance_from_gains, run_benchmark
from .eval.benchmark import query_seed
from .ingest import IngestError, load_corpus, load_eval_bundle, load_field_map, load_qrels, load_queries, write_jsonl
from .llm import HttpTransport, LlmCallError, LlmClient, LlmEndpointConfig, LlmScorer, TransportError, as_client
from .offline import OfflineKeywordWriter, OfflineScorer, OfflineSummaryWriter, OfflineTopicClusterer
from .scoring import ScorerError
from .synthetic import balanced_tree, planted_queries
from .traversal import SearchAborted, SearchConfig, SearchResult, search
from .tree import SemanticTree, TreeFormatError, load_tree, serialize_tree, validate_tree

logger = logging.getLogger("semtree")

EXIT_OK, EXIT_USAGE, EXIT_BACKEND, EXIT_DATA = 0, 2, 3, 4


class UsageError(Exception):
    pass


SEARCH_DEFAULTS = {
    "beam_size": 2,
    "iterations": 20,
    "ema_alpha": 0.5,
    "leaf_aug_count": 10,
    "top_k": 100,
    "relevance_definition": "",
    "calibration": "mle",
}
ORACLE_DEFAULTS = {"slate_bias": 0.0, "score_noise": 0.0, "aggregation": "max"}
COMMON_DEFAULTS = {"seed": 0, "out_dir": "out", "llm": {}, "field_map": None}

DEFAULTS: dict[str, dict] = {
    "build-tree": {
        **COMMON_DEFAULTS,
        "corpus": None,
        "strategy": "bottom-up",
        "metadata": False,
        "max_branching": 16,
        "backend": "offline",
        "summary_char_budget": 24_000,
        "max_tokens": 32_000,
        "chars_per_token": 4.0,
        "batch_size": 8,
        "parallelism": 1,
    },
    "search": {
        **COMMON_DEFAULTS,
        **SEARCH_DEFAULTS,
        **ORACLE_DEFAULTS,
        "tree": None,
        "query": None,
        "query_id": "q0",
        "query_file": None,
        "qrels": None,
        "exclude_file": None,
        "backend": "oracle",
        "trace": False,
    },
    "eval": {
        **COMMON_DEFAULTS,
        **SEARCH_DEFAULTS,
        **ORACLE_DEFAULTS,
        "tree": None,
        "queries": None,
        "qrels": None,
        "exclude_file": None,
        "corpus": None,
        "backend": "oracle",
        "sweep": [],
        "cost_curve": False,
        "parallelism": None,
    },
    "simulate": {
        **COMMON_DEFAULTS,
        **SEARCH_DEFAULTS,
        **ORACLE_DEFAULTS,
        "slate_bias": 0.15,
        "score_noise": 0.1,
        "shape": [10, 10, 10],
        "max_branching": None,
        "queries": 50,
        "gold_per_query": 6,
        "gold_clusters": 2,
        "max_gain": 2,
        "distractors": 100,
        "sweep": [],
        "budget": None,
        "beam_grid": [1, 2, 4],
        "parallelism": None,
    },
}


# -- argument parsing ---------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    p.add_argument("--config", help="JSON file with option values (flags take precedence)")
    p.add_argument("--out-dir", dest="out_dir", default=None, help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=None, help="root random seed")
    p.add_argument("--llm-config", dest="llm_config", help="JSON endpoint config for --backend llm")
    p.add_argument("--field-map", dest="field_map", help="JSON field-name mapping for input files")


def _add_search(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("search")
    g.add_argument("--beam-size", "-B", dest="beam_size", type=int, default=None)
    g.add_argument("--iterations", "-N", dest="iterations", type=int, default=None)
    g.add_argument("--alpha", dest="ema_alpha", type=float, default=None, help="path-relevance smoothing")
    g.add_argument("--leaf-aug", dest="leaf_aug_count", type=int, default=None, help="leaves added to leaf slates")
    g.add_argument("--top-k", "-K", dest="top_k", type=int, default=None)
    g.add_argument("--relevance-definition", dest="relevance_definition", default=None)
    g.add_argument("--calibration", choices=["mle", "mean", "last"], default=None)
    o = p.add_argument_group("oracle scorer")
    o.add_argument("--slate-bias", dest="slate_bias", type=float, default=None, help="per-slate bias half-width")
    o.add_argument("--score-noise", dest="score_noise", type=float, default=None, help="score noise std-dev")
    o.add_argument("--aggregation", choices=["max", "mean"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semtree", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-tree", help="build a tree over a corpus")
    _add_common(p)
    p.add_argument("--corpus", default=None, help="corpus JSONL")
    p.add_argument("--strategy", choices=["bottom-up", "top-down"], default=None)
    p.add_argument("--metadata", action=argparse.BooleanOptionalAction, default=None,
                   help="bottom-up: start from source/position groups")
    p.add_argument("--max-branching", "-M", dest="max_branching", type=int, default=None)
    p.add_argument("--backend", choices=["offline", "llm"], default=None)
    p.add_argument("--summary-char-budget", dest="summary_char_budget", type=int, default=None)
    p.add_argument("--max-tokens", dest="max_tokens", type=int, default=None)
    p.add_argument("--chars-per-token", dest="chars_per_token", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--parallelism", type=int, default=None)

    p = sub.add_parser("search", help="rank documents for one or more queries")
    _add_common(p)
    _add_search(p)
    p.add_argument("--tree", default=None)
    p.add_argument("--query", default=None, help="query text")
    p.add_argument("--query-id", dest="query_id", default=None)
    p.add_argument("--query-file", dest="query_file", default=None, help="queries JSONL")
    p.add_argument("--qrels", default=None, help="judgments JSONL (oracle backend)")
    p.add_argument("--exclude-file", dest="exclude_file", default=None)
    p.add_argument("--backend", choices=["oracle", "offline", "llm"], default=None)
    p.add_argument("--trace", action=argparse.BooleanOptionalAction, default=None, help="write trace.jsonl")

    p = sub.add_parser("eval", help="benchmark over a query set, optionally sweeping parameters")
    _add_common(p)
    _add_search(p)
    p.add_argument("--tree", default=None)
    p.add_argument("--queries", default=None)
    p.add_argument("--qrels", default=None)
    p.add_argument("--exclude-file", dest="exclude_file", default=None)
    p.add_argument("--corpus", default=None, help="corpus JSONL, used only to check references")
    p.add_argument("--backend", choices=["oracle", "offline", "llm"], default=None)
    p.add_argument("--sweep", action="append", default=None, metavar="PARAM=V1,V2",
                   help="grid axis; repeat for a cartesian product")
    p.add_argument("--cost-curve", dest="cost_curve", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--parallelism", type=int, default=None)

    p = sub.add_parser("simulate", help="synthetic tree + oracle queries + ablation comparison")
    _add_common(p)
    _add_search(p)
    p.add_argument("--shape", type=_int_list, default=None, help="branching per level, e.g. 10,10,10")
    p.add_argument("--max-branching", "-M", dest="max_branching", type=int, default=None)
    p.add_argument("--queries", type=int, default=None)
    p.add_argument("--gold-per-query", dest="gold_per_query", type=int, default=None)
    p.add_argument("--gold-clusters", dest="gold_clusters", type=int, default=None)
    p.add_argument("--max-gain", dest="max_gain", type=int, default=None)
    p.add_argument("--distractors", type=int, default=None)
    p.add_argument("--sweep", action="append", default=None, metavar="PARAM=V1,V2")
    p.add_argument("--budget", type=int, default=None, help="fixed scorer-call budget; sweeps --beam-grid")
    p.add_argument("--beam-grid", dest="beam_grid", type=_int_list, default=None)
    p.add_argument("--parallelism", type=int, default=None)
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS[command]))
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            from_file = json.load(f)
        for k, v in from_file.items():
            if k in cfg:
                cfg[k] = v
            elif k != "command":
                logger.warning("ignoring unknown config key %r", k)
    for k, v in vars(args).items():
        if k in cfg and v is not None:
            cfg[k] = v
    if getattr(args, "llm_config", None):
        with open(args.llm_config, encoding="utf-8") as f:
            cfg["llm"] = json.load(f)
    if "parallelism" in cfg and cfg["parallelism"] is None:
        cfg["parallelism"] = os.cpu_count() or 1
    return cfg


def parse_sweep(items: list) -> list[dict] | dict:
    """``["alpha=0,0.5", "l=0,5"]`` -> ``{"alpha": [0, 0.5], "l": [0, 5]}``."""
    if items and isinstance(items[0], dict):
        return items
    grid: dict = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"bad --sweep {item!r}; expected PARAM=V1,V2")
        k, vals = item.split("=", 1)
        grid[k.strip()] = [_literal(v.strip()) for v in vals.split(",") if v.strip()]
    return grid


def _literal(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


# -- shared helpers -----------------------------------------------------------------------


def search_config(cfg: dict) -> SearchConfig:
    try:
        return SearchConfig.from_dict({k: cfg[k] for k in SEARCH_DEFAULTS} | {"seed": cfg["seed"]})
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from None


def llm_client(cfg: dict) -> LlmClient:
    endpoint = LlmEndpointConfig.from_dict(cfg["llm"]) if cfg["llm"] else LlmEndpointConfig()
    return LlmClient(HttpTransport(endpoint), endpoint, seed=cfg["seed"])


def scorer_factory(cfg: dict, tree: SemanticTree, qrels: dict[str, dict[str, int]]):
    backend = cfg["backend"]
    if backend == "oracle":
        rel = {qid: relevance_from_gains(g) for qid, g in qrels.items()}
        return oracle_factory(
            tree, rel, (-cfg["slate_bias"], cfg["slate_bias"]), cfg["score_noise"], cfg["aggregation"], cfg["seed"]
        )
    client = as_client(OfflineScorer()) if backend == "offline" else llm_client(cfg)
    return lambda qid: LlmScorer(client)


def read_exclusions(path) -> tuple[dict[str, set[str]], set[str]]:
    """JSONL ``{query_id, excluded_doc_ids}`` records and/or bare doc ids (one per line, all queries)."""
    per_query: dict[str, set[str]] = {}
    everywhere: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                try:
                    rec = json.loads(line)
                    per_query.setdefault(str(rec["query_id"]), set()).update(map(str, rec["excluded_doc_ids"]))
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise IngestError(f"bad exclusion record: {e}", path, line_no) from None
            else:
                everywhere.add(line)
    return per_query, everywhere


def _field_map(cfg):
    return load_field_map(cfg["field_map"]) if cfg.get("field_map") else None


class Outputs:
    """Writes files under the output directory and records their digests."""

    def __init__(self, out_dir, command: str, cfg: dict):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.files: dict[str, str] = {}
        self.write_text("config.json", json.dumps({"command": command, **cfg}, indent=1, sort_keys=True) + "\n")

    def write_bytes(self, name: str, data: bytes) -> Path:
        path = self.dir / name
        path.write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        return path

    def write_text(self, name: str, text: str) -> Path:
        return self.write_bytes(name, text.encode("utf-8"))

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(obj, indent=1, sort_keys=True) + "\n")

    def close(self, status: str = "ok", **extra) -> None:
        manifest = {"command": self.command, "version": __version__, "status": status, "files": self.files, **extra}
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", "utf-8")


def _ranked_tsv(rows: list[tuple[str, SearchResult]]) -> str:
    lines = ["query_id\trank\tdoc_id\tscore"]
    for qid, res in rows:
        lines += [f"{qid}\t{i}\t{d}\t{p:.6f}" for i, (d, p) in enumerate(res.ranked, start=1)]
    return "\n".join(lines) + "\n"


# -- commands -------------------------------------------------------------------------------


def cmd_build_tree(cfg: dict) -> int:
    if not cfg["corpus"]:
        raise UsageError("--corpus is required")
    corpus = load_corpus(cfg["corpus"], _field_map(cfg))
    out = Outputs(cfg["out_dir"], "build-tree", cfg)
    man = BuildManifest()
    M = cfg["max_branching"]
    offline = cfg["backend"] == "offline"
    if cfg["strategy"] == "bottom-up":
        client = as_client(OfflineSummaryWriter()) if offline else llm_client(cfg)
        initial = metadata_initial_clusters(corpus, M) if cfg["metadata"] else None
        tree = build_bottom_up(
            corpus,
            summarize=LlmSummarizer(client),
            max_branching=M,
            initial_clusters=initial,
            seed=cfg["seed"],
            summary_char_budget=cfg["summary_char_budget"],
            max_workers=cfg["parallelism"],
            manifest=man,
        )
    else:
        if offline:
            keywords, topics = as_client(OfflineKeywordWriter()), as_client(OfflineTopicClusterer(cfg["seed"]))
        else:
            keywords = topics = llm_client(cfg)
        given = _stored_summaries(corpus)
        tree = build_top_down(
            corpus,
            keywords,
            topics,
            max_branching=M,
            max_tokens=cfg["max_tokens"],
            chars_per_token=cfg["chars_per_token"],
            batch_size=cfg["batch_size"],
            max_workers=cfg["parallelism"],
            summaries=given,
            manifest=man,
        )
    problems = validate_tree(tree, corpus)
    if problems:
        raise ConstructionError("built tree failed validation: " + "; ".join(problems[:5]))
    out.write_bytes("tree.json", serialize_tree(tree))
    out.write_text("build_manifest.json", man.to_json())
    out.close(nodes=len(tree), height=tree.height())
    logger.info("wrote %s (%d nodes, height %d)", out.dir / "tree.json", len(tree), tree.height())
    return EXIT_OK


def _stored_summaries(corpus) -> dict[str, MultiLevelSummary] | None:
    """Use keyword levels shipped with the corpus when every document has them."""
    out = {}
    for d in corpus:
        levels = d.extra.get("summary_levels")
        if not isinstance(levels, list) or len(levels) != 5:
            return None
        out[d.doc_id] = MultiLevelSummary(tuple(map(str, levels)))
    return out


def cmd_search(cfg: dict) -> int:
    if not cfg["tree"]:
        raise UsageError("--tree is required")
    if bool(cfg["query"]) == bool(cfg["query_file"]):
        raise UsageError("give exactly one of --query or --query-file")
    tree = load_tree(cfg["tree"])
    queries = load_queries(cfg["query_file"], _field_map(cfg)) if cfg["query_file"] else [Query(cfg["query_id"], cfg["query"])]
    qrels = load_qrels(cfg["qrels"], _field_map(cfg)) if cfg["qrels"] else {}
    if cfg["backend"] == "oracle" and not qrels:
        raise UsageError("the oracle backend needs --qrels")
    per_query, everywhere = read_exclusions(cfg["exclude_file"]) if cfg["exclude_file"] else ({}, set())
    make_scorer = scorer_factory(cfg, tree, qrels)
    base = search_config(cfg)
    out = Outputs(cfg["out_dir"], "search", cfg)
    done: list[tuple[str, SearchResult]] = []
    status, code = "ok", EXIT_OK
    for q in sorted(queries, key=lambda q: q.query_id):
        conf = replace(base, seed=query_seed(base.seed, "search/" + q.query_id))
        excluded = per_query.get(q.query_id, set()) | everywhere
        try:
            res = search(q.text, tree, make_scorer(q.query_id), conf, excluded)
        except SearchAborted as e:
            logger.error("query %s: %s", q.query_id, e)
            done.append((q.query_id, e.partial))
            status, code = f"aborted at query {q.query_id}: {e}", EXIT_BACKEND
            break
        done.append((q.query_id, res))
    out.write_text("ranked.tsv", _ranked_tsv(done))
    if cfg["trace"] or code != EXIT_OK:
        out.write_text("trace.jsonl", "".join(
            json.dumps({"query_id": qid, **asdict(ev)}, sort_keys=True) + "\n" for qid, r in done for ev in r.trace
        ))
    out.write_json("cost.json", {qid: asdict(r.cost) for qid, r in done})
    out.close(status)
    return code


def _bundle(cfg: dict, tree: SemanticTree) -> EvalBundle:
    if not cfg["queries"] or not cfg["qrels"]:
        raise UsageError("--queries and --qrels are required")
    corpus = load_corpus(cfg["corpus"], _field_map(cfg)) if cfg["corpus"] else None
    bundle = load_eval_bundle(cfg["queries"], cfg["qrels"], None, corpus, _field_map(cfg))
    if cfg["exclude_file"]:
        per_query, everywhere = read_exclusions(cfg["exclude_file"])
        for q in bundle.queries:
            bundle.exclusions[q.query_id] = bundle.excluded(q.query_id) | per_query.get(q.query_id, set()) | everywhere
    return bundle


def _write_reports(out: Outputs, reports, bundle: EvalBundle | None, cost_curve: bool) -> None:
    head = ["label", "ndcg_at_10", "recall_at_100", "scorer_calls", "input_tokens", "output_tokens", "flagged"]
    lines = ["\t".join(head)]
    for i, rep in enumerate(reports):
        a = rep.aggregates
        flagged = sum(bool(r.flags) for r in rep.rows)
        lines.append("\t".join([rep.label] + [f"{a[h]:.6f}" for h in head[1:-1]] + [str(flagged)]))
        out.write_text(f"report_{i:02d}.tsv", rep.to_table())
        if cost_curve and bundle is not None:
            pts = emit_cost_curve(
                (res, bundle.judgments(qid), bundle.excluded(qid)) for qid, res in sorted(rep.results.items())
            )
            out.write_text(f"cost_curve_{i:02d}.tsv", cost_curve_tsv(pts))
    out.write_text("summary.tsv", "\n".join(lines) + "\n")


def _any_backend_failure(reports) -> bool:
    return any("aborted" in r.flags for rep in reports for r in rep.rows)


def cmd_eval(cfg: dict) -> int:
    if not cfg["tree"]:
        raise UsageError("--tree is required")
    tree = load_tree(cfg["tree"])
    bundle = _bundle(cfg, tree)
    sweep = parse_sweep(cfg["sweep"]) if cfg["sweep"] else None
    out = Outputs(cfg["out_dir"], "eval", cfg)
    reports = run_benchmark(
        tree,
        bundle,
        scorer_factory(cfg, tree, bundle.qrels),
        search_config(cfg),
        sweep,
        parallelism=cfg["parallelism"],
        keep_results=cfg["cost_curve"],
    )
    _write_reports(out, reports, bundle, cfg["cost_curve"])
    failed = _any_backend_failure(reports)
    out.close("backend failures" if failed else "ok", warnings=bundle.warnings)
    return EXIT_BACKEND if failed else EXIT_OK


SIMULATION_ABLATIONS = [
    {},
    {"calibration": "last"},
    {"ema_alpha": 0.0},
    {"leaf_aug_count": 0},
    {"leaf_aug_count": 5},
]


def cmd_simulate(cfg: dict) -> int:
    shape = cfg["shape"]
    tree = balanced_tree(shape, cfg["max_branching"])
    planted = planted_queries(
        tree,
        cfg["queries"],
        n_gold=cfg["gold_per_query"],
        n_gold_clusters=cfg["gold_clusters"],
        max_gain=cfg["max_gain"],
        n_distractors=cfg["distractors"],
        seed=query_seed(cfg["seed"], "simulate/queries"),
    )
    bundle = EvalBundle(
        [Query(p.query_id, p.text) for p in planted],
        {p.query_id: p.gains for p in planted},
        {p.query_id: set(p.excluded) for p in planted},
    )
    relevance = {p.query_id: p.relevance for p in planted}
    make_scorer = oracle_factory(
        tree, relevance, (-cfg["slate_bias"], cfg["slate_bias"]), cfg["score_noise"], cfg["aggregation"], cfg["seed"]
    )
    if cfg["budget"]:
        sweep = [{"beam_size": b, "iterations": max(1, cfg["budget"] // b)} for b in cfg["beam_grid"]]
    elif cfg["sweep"]:
        sweep = parse_sweep(cfg["sweep"])
    else:
        sweep = SIMULATION_ABLATIONS
    out = Outputs(cfg["out_dir"], "simulate", cfg)
    out.write_bytes("tree.json", serialize_tree(tree))
    write_jsonl([{"query_id": p.query_id, "text": p.text} for p in planted], out.dir / "queries.jsonl")
    write_jsonl(
        [{"query_id": p.query_id, "doc_id": d, "gain": g} for p in planted for d, g in sorted(p.gains.items())],
        out.dir / "qrels.jsonl",
    )
    for name in ("queries.jsonl", "qrels.jsonl"):
        out.files[name] = hashlib.sha256((out.dir / name).read_bytes()).hexdigest()
    reports = run_benchmark(tree, bundle, make_scorer, search_config(cfg), sweep, parallelism=cfg["parallelism"])
    _write_reports(out, reports, None, False)
    out.close()
    base = reports[0].aggregates["ndcg_at_10"]
    for rep in reports:
        logger.info("%-40s nDCG@10 %.4f (%+.4f)", rep.label, rep.aggregates["ndcg_at_10"], rep.aggregates["ndcg_at_10"] - base)
    return EXIT_OK


COMMANDS: dict[str, Callable[[dict], int]] = {
    "build-tree": cmd_build_tree,
    "search": cmd_search,
    "eval": cmd_eval,
    "simulate": cmd_simulate,
}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, (ScorerError, LlmCallError, TransportError)):
        return EXIT_BACKEND
    if isinstance(exc, ConstructionError):
        return EXIT_BACKEND if isinstance(exc.__cause__, (ScorerError, TransportError)) else EXIT_DATA
    return EXIT_DATA


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    try:
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except UsageError as e:
        parser.error(str(e))  # exits with status 2
    except (
        IngestError,
        TreeFormatError,
        ConstructionError,
        ScorerError,
        TransportError,
        OSError,
        ValueError,
    ) as e:
        logger.error("%s", e)
        return _exit_code(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
