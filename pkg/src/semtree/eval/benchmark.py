"""Benchmark runner, parameter sweeps and cost-vs-quality curves."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ..scoring import ListwiseScorer, OracleConfig, OracleScorer
from ..traversal import SearchAborted, SearchConfig, SearchResult, search
from ..tree import SemanticTree
from .bundle import EvalBundle
from .metrics import has_relevant, ndcg_at_k, recall_at_k

logger = logging.getLogger(__name__)

ScorerFactory = Callable[[str], ListwiseScorer]

PARAM_ALIASES = {
    "alpha": "ema_alpha",
    "l": "leaf_aug_count",
    "ell": "leaf_aug_count",
    "B": "beam_size",
    "beam": "beam_size",
    "N": "iterations",
    "K": "top_k",
}
METRIC_FIELDS = ("ndcg_at_10", "recall_at_100", "scorer_calls", "input_tokens", "output_tokens", "leaves_evaluated")


@dataclass
class QueryRow:
    query_id: str
    ndcg_at_10: float = 0.0
    recall_at_100: float = 0.0
    scorer_calls: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    leaves_evaluated: int = 0
    iterations: int = 0
    flags: list[str] = field(default_factory=list)
    error: str | None = None


@dataclass
class MetricReport:
    label: str
    config: dict
    rows: list[QueryRow]
    aggregates: dict[str, float]
    results: dict[str, SearchResult] = field(default_factory=dict, repr=False)

    def to_table(self) -> str:
        """Fixed-width text table: one row per query plus a mean row."""
        head = ["query_id", *METRIC_FIELDS, "flags"]
        lines = ["\t".join(head)]
        for r in self.rows:
            vals = [r.query_id] + [_fmt(getattr(r, f)) for f in METRIC_FIELDS] + [",".join(r.flags) or "-"]
            lines.append("\t".join(vals))
        lines.append("\t".join(["mean"] + [_fmt(self.aggregates[f]) for f in METRIC_FIELDS] + ["-"]))
        return "\n".join(lines) + "\n"

    def to_records(self) -> list[dict]:
        return [asdict(r) for r in self.rows]


def _fmt(x) -> str:
    return f"{x:.6f}" if isinstance(x, float) else str(x)


def normalize_overrides(overrides: Mapping) -> dict:
    out = {}
    for k, v in overrides.items():
        key = PARAM_ALIASES.get(k, k)
        if key not in SearchConfig.__dataclass_fields__:
            raise ValueError(f"unknown sweep parameter {k!r}")
        out[key] = v
    return out


def expand_grid(sweep: Mapping[str, Sequence] | Sequence[Mapping] | None) -> list[dict]:
    """Cartesian product of a ``{param: values}`` mapping, or an explicit list of points."""
    if sweep is None:
        return [{}]
    if isinstance(sweep, Mapping):
        keys = list(sweep)
        return [normalize_overrides(dict(zip(keys, combo))) for combo in itertools.product(*(sweep[k] for k in keys))]
    return [normalize_overrides(p) for p in sweep]


def ablation_label(overrides: Mapping) -> str:
    if not overrides:
        return "full"
    parts = [f"{k}={v}" for k, v in sorted(overrides.items())]
    if overrides.get("ema_alpha") == 0:
        parts.append("no-path-relevance")
    if overrides.get("calibration") == "last":
        parts.append("no-score-calibration")
    if overrides.get("leaf_aug_count") == 0:
        parts.append("no-cross-branch-calibration")
    return " ".join(parts)


def query_seed(root_seed: int, query_id: str) -> int:
    """Per-query seed split from the run's root seed."""
    return int(np.random.SeedSequence([root_seed, zlib.crc32(query_id.encode("utf-8"))]).generate_state(1)[0])


def relevance_from_gains(gains: Mapping[str, int]) -> dict[str, float]:
    """Oracle relevance for judged docs: ``0.5 + 0.5 * gain / max_gain``."""
    top = max(gains.values(), default=0)
    return {d: 0.5 + 0.5 * g / top for d, g in gains.items() if g > 0}


def oracle_factory(
    tree: SemanticTree,
    relevance_by_query: Mapping[str, Mapping[str, float]],
    slate_bias_range: tuple[float, float] = (0.0, 0.0),
    score_noise_sigma: float = 0.0,
    aggregation: str = "max",
    seed: int = 0,
) -> ScorerFactory:
    def make(query_id: str) -> ListwiseScorer:
        cfg = OracleConfig(
            relevance_by_query.get(query_id, {}),
            aggregation,
            slate_bias_range,
            score_noise_sigma,
            query_seed(seed, "oracle/" + query_id),
        )
        return OracleScorer(tree, cfg)

    return make


def run_query(
    tree: SemanticTree, bundle: EvalBundle, scorer_for: ScorerFactory, config: SearchConfig, query_id: str, text: str
) -> tuple[QueryRow, SearchResult | None]:
    qrels = bundle.judgments(query_id)
    excluded = bundle.excluded(query_id)
    row = QueryRow(query_id)
    if not has_relevant(qrels, excluded):
        row.flags.append("no-relevant")
    cfg = replace(config, seed=query_seed(config.seed, "search/" + query_id))
    try:
        result = search(text, tree, scorer_for(query_id), cfg, excluded)
    except SearchAborted as e:
        row.error = str(e)
        row.flags.append("aborted")
        result = e.partial
    except Exception as e:  # keep the run going; the row records why
        logger.exception("query %s failed", query_id)
        row.error = f"{type(e).__name__}: {e}"
        row.flags.append("failed")
        return row, None
    ranked = result.doc_ids
    row.ndcg_at_10 = ndcg_at_k(ranked, qrels, 10, excluded)
    row.recall_at_100 = recall_at_k(ranked, qrels, 100, excluded)
    row.scorer_calls = result.cost.scorer_calls
    row.input_tokens = result.cost.input_tokens
    row.output_tokens = result.cost.output_tokens
    row.leaves_evaluated = result.cost.leaves_evaluated
    row.iterations = result.iterations_run
    if excluded and _gold_path_pruned(tree, result, qrels, excluded):
        row.flags.append("gold-path-pruned")
    return row, result


def _gold_path_pruned(tree: SemanticTree, result: SearchResult, qrels, excluded, threshold: float = 0.5) -> bool:
    """True if an expanded node on a gold leaf's path had most of its leaves excluded."""
    stale = {e.node for e in result.trace if e.pruned_fraction >= threshold}
    if not stale:
        return False
    for d, g in qrels.items():
        if g <= 0 or d in excluded:
            continue
        try:
            v = tree.leaf_for_doc(d)
        except KeyError:
            continue
        while v is not None:
            if v in stale:
                return True
            v = tree.parent(v)
    return False


def aggregate(rows: Sequence[QueryRow]) -> dict[str, float]:
    if not rows:
        return {f: 0.0 for f in METRIC_FIELDS}
    return {f: float(np.mean([getattr(r, f) for r in rows])) for f in METRIC_FIELDS}


def run_benchmark(
    tree: SemanticTree,
    bundle: EvalBundle,
    scorer_for: ScorerFactory,
    config: SearchConfig | None = None,
    sweep: Mapping[str, Sequence] | Sequence[Mapping] | None = None,
    parallelism: int = 1,
    keep_results: bool = False,
) -> list[MetricReport]:
    """One search per query per grid point; one report per grid point."""
    config = config or SearchConfig()
    reports = []
    for overrides in expand_grid(sweep):
        cfg = replace(config, **overrides)
        queries = sorted(bundle.queries, key=lambda q: q.query_id)

        def job(q):
            return run_query(tree, bundle, scorer_for, cfg, q.query_id, q.text)

        if parallelism > 1:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                outs = list(pool.map(job, queries))
        else:
            outs = [job(q) for q in queries]
        rows = [r for r, _ in outs]
        results = {r.query_id: res for r, res in outs if res is not None} if keep_results else {}
        reports.append(MetricReport(ablation_label(overrides), cfg.to_dict(), rows, aggregate(rows), results))
    return reports


# -- cost curves ---------------------------------------------------------------


@dataclass
class CostPoint:
    iteration: int
    scorer_calls: float
    input_tokens: float
    ndcg_at_10: float


def cost_curve(result: SearchResult, qrels: Mapping[str, int], excluded: Iterable[str] = ()) -> list[CostPoint]:
    """nDCG@10 of the running ranking after each iteration against cumulative cost."""
    excluded = set(excluded)
    return [
        CostPoint(c.iteration, c.scorer_calls, c.input_tokens, ndcg_at_k(c.ranked, qrels, 10, excluded))
        for c in result.checkpoints
    ]


def emit_cost_curve(
    results: Iterable[tuple[SearchResult, Mapping[str, int], Iterable[str]]]
) -> list[CostPoint]:
    """Average per-iteration checkpoints over a stream of query results.

    Queries that stopped early carry their last checkpoint forward.
    """
    curves = [cost_curve(r, q, x) for r, q, x in results]
    curves = [c for c in curves if c]
    if not curves:
        return []
    n = max(len(c) for c in curves)
    out = []
    for i in range(n):
        pts = [c[min(i, len(c) - 1)] for c in curves]
        out.append(
            CostPoint(
                i + 1,
                float(np.mean([p.scorer_calls for p in pts])),
                float(np.mean([p.input_tokens for p in pts])),
                float(np.mean([p.ndcg_at_10 for p in pts])),
            )
        )
    return out


def cost_curve_tsv(points: Sequence[CostPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(["iteration", "scorer_calls", "input_tokens", "ndcg_at_10"])
    for p in points:
        w.writerow([p.iteration, _fmt(float(p.scorer_calls)), _fmt(float(p.input_tokens)), _fmt(p.ndcg_at_10)])
    return buf.getvalue()
