from .benchmark import (
    CostPoint,
    MetricReport,
    QueryRow,
    ablation_label,
    cost_curve,
    cost_curve_tsv,
    emit_cost_curve,
    expand_grid,
    oracle_factory,
    query_seed,
    relevance_from_gains,
    run_benchmark,
)
from .bundle import EvalBundle, Qrels, Query
from .metrics import dcg, has_relevant, ndcg_at_k, recall_at_k

__all__ = [
    "CostPoint",
    "EvalBundle",
    "MetricReport",
    "Qrels",
    "Query",
    "QueryRow",
    "ablation_label",
    "cost_curve",
    "cost_curve_tsv",
    "dcg",
    "emit_cost_curve",
    "expand_grid",
    "has_relevant",
    "ndcg_at_k",
    "oracle_factory",
    "query_seed",
    "recall_at_k",
    "relevance_from_gains",
    "run_benchmark",
]
