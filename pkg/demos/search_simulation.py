"""
Best-first search over a synthetic tree
=======================================

A 1000-leaf tree with branching 10 and an oracle scorer that knows which
leaves matter. The scorer is made unreliable on purpose: every slate gets a
random offset and every score some noise. We compare the full search against
variants with one mechanism switched off.
"""

from semtree.eval import EvalBundle, Query, emit_cost_curve, oracle_factory, run_benchmark
from semtree.synthetic import balanced_tree, planted_queries
from semtree.traversal import SearchConfig

tree = balanced_tree([10, 10, 10])
planted = planted_queries(tree, 20, seed=1)
bundle = EvalBundle(
    [Query(p.query_id, p.text) for p in planted],
    {p.query_id: p.gains for p in planted},
    {p.query_id: set() for p in planted},
)
scorers = oracle_factory(tree, {p.query_id: p.relevance for p in planted}, (-0.15, 0.15), 0.1, seed=1)

# %%
# One report per configuration; ``keep_results`` retains rankings for the cost curve.
variants = [{}, {"calibration": "last"}, {"ema_alpha": 0.0}, {"leaf_aug_count": 0}]
reports = run_benchmark(tree, bundle, scorers, SearchConfig(), variants, keep_results=True)
for rep in reports:
    a = rep.aggregates
    print(f"{rep.label:45s} nDCG@10 {a['ndcg_at_10']:.3f}  recall@100 {a['recall_at_100']:.3f}  calls {a['scorer_calls']:.0f}")

# %%
# Quality stays at zero until the search has descended to the leaves.
full = reports[0]
curve = emit_cost_curve((full.results[q], bundle.judgments(q), ()) for q in sorted(full.results))
for pt in curve[:8]:
    print(f"iteration {pt.iteration:2d}  calls {pt.scorer_calls:4.1f}  nDCG@10 {pt.ndcg_at_10:.3f}")
