"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v``; the verdict lines are also
collected into the terminal summary by ``conftest.py``.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import kendalltau, pearsonr

from semtree import prompts
from semtree.calibration import SolverConfig, solve_mle
from semtree.cli import main
from semtree.construction import BuildManifest, build_bottom_up, build_top_down, chunk_partition
from semtree.eval import EvalBundle, Query, cost_curve, ndcg_at_k, oracle_factory, recall_at_k, run_benchmark
from semtree.llm import as_client
from semtree.prompts import ParseErrorKind, ResponseParseError
from semtree.scoring import OracleConfig, OracleScorer
from semtree.synthetic import balanced_tree, planted_queries, topic_corpus
from semtree.traversal import SearchConfig, search
from semtree.tree import Corpus, Document, leaf_descendants, validate_tree

from .mocks import PlantedKeywordWriter, PrefixClusterer, concat_summarizer, planted_levels
from .test_calibration import affine_fixture
from .test_prompts import OPTIONS, golden

VERDICTS: dict[int, str] = {}


def verdict(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    VERDICTS[n] = line
    print(line)
    assert ok, line


# -- 1 ---------------------------------------------------------------------------


def test_criterion_01_calibration_recovery():
    h, truth = affine_fixture(n_nodes=50, n_slates=30, a=0.8, bias=0.1, sigma=0.02, seed=0)
    t0 = time.perf_counter()
    m = solve_mle(h)
    elapsed = time.perf_counter() - t0
    nodes = sorted(m.latent)
    est, ref = [m.latent[v] for v in nodes], [truth[v] for v in nodes]
    r = pearsonr(est, ref).statistic
    tau = kendalltau(est, ref).statistic
    ok = r >= 0.99 and tau >= 0.95 and elapsed < 5.0
    verdict(1, "calibration recovery", ok, f"pearson={r:.4f} (>=0.99) tau={tau:.4f} (>=0.95) time={elapsed:.3f}s (<5)")


# -- 2 ---------------------------------------------------------------------------


def test_criterion_02_mean_reduction():
    h, _ = affine_fixture(seed=11)
    m = solve_mle(h, SolverConfig.mean_only())
    obs: dict[str, list[float]] = {}
    for rec in h:
        for v, s in rec.entries:
            obs.setdefault(v, []).append(s)
    err = max(abs(m.latent[v] - float(np.mean(xs))) for v, xs in obs.items())
    verdict(2, "mean reduction", err <= 1e-6, f"max |s_hat - mean| = {err:.2e} (<=1e-6)")


# -- 3 ---------------------------------------------------------------------------


def test_criterion_03_noiseless_oracle_optimality():
    rng = np.random.default_rng(3)
    trees = {3: balanced_tree([10, 10, 10]), 4: balanced_tree([10, 10, 10, 10])}
    docs = {d: sorted(t.nodes[v].doc_id for v in t.leaves()) for d, t in trees.items()}
    hits, slowest = 0, 0.0
    for run in range(100):
        depth = 3 + run % 2
        tree = trees[depth]
        gold = str(rng.choice(docs[depth]))
        scorer = OracleScorer(tree, OracleConfig({gold: 1.0}, seed=run))
        t0 = time.perf_counter()
        res = search(f"q{run}", tree, scorer, SearchConfig(beam_size=1, iterations=depth, seed=run))
        slowest = max(slowest, time.perf_counter() - t0)
        hits += bool(res.doc_ids) and res.doc_ids[0] == gold
    ok = hits == 100 and slowest < 1.0
    verdict(3, "noiseless-oracle optimality", ok, f"gold first in {hits}/100 runs, slowest query {slowest:.3f}s (<1)")


# -- 4 ---------------------------------------------------------------------------


def test_criterion_04_budget_law():
    small = balanced_tree([22, 22, 22], n_leaves=1000)
    large = balanced_tree([22, 22, 22], n_leaves=10000)
    worst_excess, mismatches, runs = 0, 0, 0
    for B, N in [(1, 5), (2, 10), (3, 20), (4, 30)]:
        for seed in range(5):
            calls = []
            for tree in (small, large):
                docs = sorted(tree.nodes[v].doc_id for v in tree.leaves())
                rng = random.Random(seed)
                rel = {d: rng.random() for d in rng.sample(docs, 50)}
                cfg = OracleConfig(rel, slate_bias_range=(-0.1, 0.1), score_noise_sigma=0.05, seed=seed)
                res = search("q", tree, OracleScorer(tree, cfg), SearchConfig(beam_size=B, iterations=N, seed=seed))
                worst_excess = max(worst_excess, res.cost.scorer_calls - B * N)
                calls.append(res.cost.scorer_calls)
                runs += 1
            mismatches += calls[0] != calls[1]
    ok = worst_excess <= 0 and mismatches == 0
    verdict(4, "budget law", ok, f"{runs} runs, max(calls - B*N)={worst_excess} (<=0), 1k-vs-10k call mismatches={mismatches}")


# -- 5 and 6: shared simulation ----------------------------------------------------


@pytest.fixture(scope="module")
def ablation_rows():
    """50 planted queries, slate bias +-0.15, noise 0.1; per-query nDCG@10 per configuration."""
    tree = balanced_tree([10, 10, 10])
    planted = planted_queries(tree, 50, seed=7)
    bundle = EvalBundle(
        [Query(p.query_id, p.text) for p in planted],
        {p.query_id: p.gains for p in planted},
        {p.query_id: set() for p in planted},
    )
    make = oracle_factory(tree, {p.query_id: p.relevance for p in planted}, (-0.15, 0.15), 0.1, seed=7)
    grid = {
        "full": {},
        "uncalibrated": {"calibration": "last"},
        "alpha0": {"ema_alpha": 0.0},
        "l0": {"leaf_aug_count": 0},
        "l5": {"leaf_aug_count": 5},
        "l10": {"leaf_aug_count": 10},
    }
    reports = run_benchmark(tree, bundle, make, SearchConfig(seed=7), list(grid.values()))
    return {name: np.array([r.ndcg_at_10 for r in rep.rows]) for name, rep in zip(grid, reports)}


def test_criterion_05_ablation_directions(ablation_rows):
    m = {k: float(v.mean()) for k, v in ablation_rows.items()}
    d_cal = m["full"] - m["uncalibrated"]
    d_alpha = m["full"] - m["alpha0"]
    ok = d_cal > 0 and d_alpha > 0
    verdict(
        5,
        "ablation directions",
        ok,
        f"calibrated {m['full']:.4f} vs uncalibrated {m['uncalibrated']:.4f} (margin {d_cal:+.4f}); "
        f"alpha=0.5 {m['full']:.4f} vs alpha=0 {m['alpha0']:.4f} (margin {d_alpha:+.4f})",
    )


def test_criterion_06_leaf_augmentation_sweep(ablation_rows):
    l0, l5, l10 = (ablation_rows[k] for k in ("l0", "l5", "l10"))
    diff = l10 - l5
    se = float(diff.std(ddof=1) / math.sqrt(len(diff)))
    gain = float(l5.mean() - l0.mean())
    ok = gain > 0 and abs(float(diff.mean())) <= 2 * se
    verdict(
        6,
        "leaf-augmentation sweep",
        ok,
        f"l=5 minus l=0 {gain:+.4f} (>0); l=10 minus l=5 {diff.mean():+.4f}, 2*SE {2 * se:.4f}",
    )


# -- 7 ---------------------------------------------------------------------------


def brute_ndcg(ranked, qrels, k, excluded):
    def dcg(gs):
        return sum((2**g - 1) / math.log2(i + 2) for i, g in enumerate(gs))

    ideal = sorted([g for d, g in qrels.items() if d not in excluded], reverse=True)[:k]
    best = dcg(ideal)
    return 0.0 if best == 0 else dcg([qrels.get(d, 0) for d in ranked[:k]]) / best


def brute_recall(ranked, qrels, k, excluded):
    rel = [d for d, g in qrels.items() if g > 0 and d not in excluded]
    if not rel:
        return 0.0
    return sum(1 for d in rel if d in ranked[:k]) / len(rel)


def test_criterion_07_metric_correctness():
    rng = random.Random(7)
    worst = 0.0
    for _ in range(1000):
        pool = [f"d{i}" for i in range(rng.randint(1, 150))]
        qrels = {d: rng.randint(0, 3) for d in rng.sample(pool, rng.randint(0, len(pool)))}
        excluded = set(rng.sample(pool, rng.randint(0, len(pool) // 4)))
        ranked = [d for d in rng.sample(pool, rng.randint(0, len(pool))) if d not in excluded]
        worst = max(
            worst,
            abs(ndcg_at_k(ranked, qrels, 10, excluded) - brute_ndcg(ranked, qrels, 10, excluded)),
            abs(recall_at_k(ranked, qrels, 100, excluded) - brute_recall(ranked, qrels, 100, excluded)),
        )
    hand = ndcg_at_k(["x", "gold"], {"gold": 1}, 10)
    ok = worst <= 1e-9 and abs(hand - 1 / math.log2(3)) <= 1e-12
    verdict(7, "metric correctness", ok, f"max deviation {worst:.1e} (<=1e-9) over 1000 instances; hand case {hand:.4f}")


# -- 8 ---------------------------------------------------------------------------


def test_criterion_08_construction_contracts():
    M = 5
    corpus = Corpus([Document(f"d{i:03d}", f"d{i:03d}") for i in range(M * M + 1)])
    bu = build_bottom_up(corpus, cluster=lambda X, m: chunk_partition(len(X), m), summarize=concat_summarizer,
                         max_branching=M, summary_char_budget=None)
    sc = topic_corpus(n_topics=4, docs_per_topic=30, seed=5)
    levels = {d.content: planted_levels(sc.topic_of[d.doc_id], int(d.doc_id.split("-d")[1])) for d in sc.corpus}
    td = build_top_down(sc.corpus, as_client(PlantedKeywordWriter(levels)), as_client(PrefixClusterer()),
                        max_branching=10, manifest=BuildManifest())
    first = td.children(td.root)
    pure = sum(len({sc.topic_of[td.nodes[x].doc_id] for x in leaf_descendants(td, v)}) == 1 for v in first)
    problems = validate_tree(bu, corpus) + validate_tree(td, sc.corpus)
    ok = bu.height() == 3 and pure == len(first) == 4 and not problems
    verdict(8, "construction contracts", ok,
            f"bottom-up depth {bu.height()} (=3); top-down purity {pure}/{len(first)} first-level nodes; "
            f"validation problems {len(problems)}")


# -- 9 ---------------------------------------------------------------------------

MALFORMED = [
    ("no json here", ParseErrorKind.NOT_JSON),
    ("[1, 2]", ParseErrorKind.BAD_TYPE),
    (json.dumps({"reasoning": "x"}), ParseErrorKind.MISSING_KEY),
    (json.dumps({"relevance_scores": [[0, "high"], [1, 3]]}), ParseErrorKind.BAD_TYPE),
    (json.dumps({"relevance_scores": [[0, 5], [2, 3]]}), ParseErrorKind.INDEX_OUT_OF_RANGE),
    (json.dumps({"relevance_scores": [[0, 5], [0, 3]]}), ParseErrorKind.DUPLICATE_INDEX),
    (json.dumps({"relevance_scores": [[0, 5]]}), ParseErrorKind.MISSING_INDEX),
]


def test_criterion_09_prompt_and_parse_contract():
    rendered = {
        "scoring.txt": prompts.render_scoring_prompt(
            "How do plants store energy from sunlight?", OPTIONS, "A passage is relevant if it explains the mechanism."
        ),
        "keywords.txt": prompts.render_keywords_prompt(
            [(0, "Photosynthesis converts light into chemical energy."), (1, "Glycolysis splits glucose.")]
        ),
        "cluster.txt": prompts.render_cluster_prompt([("Biology", 3), ("Chemistry", 1)], 2, 4),
        "summarize.txt": prompts.render_summarize_prompt(OPTIONS, 7),
    }
    exact = sum(text == golden(name) for name, text in rendered.items())
    good = json.dumps({"reasoning": "r", "ranking": [1, 0], "relevance_scores": [[0, 20], [1, 80]]})
    accepted = prompts.parse_scoring_response(good, 2).scores == [0.2, 0.8]
    rejected = 0
    for raw, kind in MALFORMED:
        try:
            prompts.parse_scoring_response(raw, 2)
        except ResponseParseError as e:
            rejected += e.kind == kind
    ok = exact == 4 and accepted and rejected == len(MALFORMED)
    verdict(9, "prompt/parse contract", ok,
            f"{exact}/4 templates byte-exact; schema accepted={accepted}; {rejected}/{len(MALFORMED)} malformations rejected")


# -- 10 --------------------------------------------------------------------------


def _primary(d):
    skip = {"config.json", "manifest.json"}
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file() and p.name not in skip}


def test_criterion_10_determinism(tmp_path):
    sc = topic_corpus(n_topics=3, docs_per_topic=10, passages_per_source=5, seed=2)
    from semtree.ingest import write_corpus

    write_corpus(sc.corpus, tmp_path / "corpus.jsonl")
    sim = tmp_path / "sim"
    first_runs = {
        "simulate": ["simulate", "--shape", "4,4,4", "--queries", "8", "--distractors", "10", "--slate-bias", "0.15",
                     "--score-noise", "0.1", "--sweep", "l=0,5", "--parallelism", "2", "--out-dir", str(sim)],
        "build-tree bottom-up": ["build-tree", "--corpus", str(tmp_path / "corpus.jsonl"), "-M", "4",
                                 "--out-dir", str(tmp_path / "bu")],
        "build-tree top-down": ["build-tree", "--corpus", str(tmp_path / "corpus.jsonl"), "-M", "4",
                                "--strategy", "top-down", "--out-dir", str(tmp_path / "td")],
        "search": ["search", "--tree", str(sim / "tree.json"), "--query-file", str(sim / "queries.jsonl"),
                   "--qrels", str(sim / "qrels.jsonl"), "--slate-bias", "0.15", "--score-noise", "0.1", "--trace",
                   "--out-dir", str(tmp_path / "se")],
        "search offline": ["search", "--tree", str(tmp_path / "bu" / "tree.json"), "--query", "kalomi",
                           "--backend", "offline", "--out-dir", str(tmp_path / "so")],
        "eval": ["eval", "--tree", str(sim / "tree.json"), "--queries", str(sim / "queries.jsonl"),
                 "--qrels", str(sim / "qrels.jsonl"), "--slate-bias", "0.15", "--score-noise", "0.1",
                 "--sweep", "alpha=0,0.5", "--cost-curve", "--parallelism", "3", "--out-dir", str(tmp_path / "ev")],
    }
    identical = 0
    for name, argv in first_runs.items():
        out = tmp_path / (argv[-1].rsplit("/", 1)[-1])
        assert main(argv) == 0, name
        rerun = tmp_path / (out.name + "_again")
        assert main([argv[0], "--config", str(out / "config.json"), "--out-dir", str(rerun)]) == 0, name
        identical += _primary(out) == _primary(rerun) and len(_primary(out)) > 0
    ok = identical == len(first_runs)
    verdict(10, "determinism", ok, f"{identical}/{len(first_runs)} command reruns byte-identical")


# -- 11 --------------------------------------------------------------------------


def test_criterion_11_cost_curve_shape():
    violations, checked = [], 0
    for shape in ([10, 10, 10], [6, 6, 6, 6]):
        depth = len(shape)
        tree = balanced_tree(shape)
        for p in planted_queries(tree, 10, seed=depth):
            for B in (1, 2, 4):
                cfg = OracleConfig({d: 0.5 + 0.5 * g / 2 for d, g in p.gains.items()}, seed=1)
                res = search(p.text, tree, OracleScorer(tree, cfg), SearchConfig(beam_size=B, iterations=12))
                pts = cost_curve(res, p.gains)
                first = next((c.iteration for c in pts if c.ndcg_at_10 > 0), None)
                checked += 1
                if first is not None and first < depth:
                    violations.append((depth, B, first))
    verdict(11, "cost-curve shape", not violations,
            f"{checked} curves, first nonzero checkpoint before tree depth in {len(violations)}")
