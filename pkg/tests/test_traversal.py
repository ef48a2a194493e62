from __future__ import annotations

import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semtree.calibration import SolverConfig
from semtree.scoring import Candidate, OracleConfig, OracleScorer, ScorerError, ScorerOutput
from semtree.synthetic import balanced_tree
from semtree.traversal import (
    SearchAborted,
    SearchConfig,
    build_slate,
    init_state,
    replay,
    search,
    trace_from_jsonl,
    trace_to_jsonl,
    update_path_relevance,
)
from semtree.tree import path_to_root


def oracle(tree, gold, **kw):
    return OracleScorer(tree, OracleConfig(gold, **kw))


def test_config_validation_and_round_trip():
    cfg = SearchConfig(beam_size=3, solver=SolverConfig(steps=10))
    assert SearchConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    for bad in (dict(beam_size=0), dict(iterations=0), dict(ema_alpha=1.5), dict(leaf_aug_count=-1),
                dict(top_k=0), dict(calibration="magic")):
        with pytest.raises(ValueError):
            SearchConfig(**bad)


def test_defaults():
    c = SearchConfig()
    assert (c.beam_size, c.iterations, c.ema_alpha, c.leaf_aug_count, c.top_k) == (2, 20, 0.5, 10, 100)


def test_noiseless_single_gold_found():
    t = balanced_tree([10, 10, 10])
    gold = "d0000437"
    res = search("q", t, oracle(t, {gold: 1.0}), SearchConfig(beam_size=1, iterations=3))
    assert res.doc_ids[0] == gold
    assert res.cost.scorer_calls == 3


def test_budget_bound_and_top_k():
    t = balanced_tree([4, 4, 4])
    cfg = SearchConfig(beam_size=2, iterations=5, top_k=7)
    res = search("q", t, oracle(t, {"d0000005": 0.9}, slate_bias_range=(-0.1, 0.1), seed=1), cfg)
    assert res.cost.scorer_calls <= cfg.beam_size * cfg.iterations
    assert len(res.ranked) <= 7
    scores = [p for _, p in res.ranked]
    assert scores == sorted(scores, reverse=True)


def test_exclusions_never_returned_and_pruned_nodes_skipped():
    t = balanced_tree([3, 3])
    first = t.children(t.root)[0]
    excluded = {t.nodes[v].doc_id for v in t.children(first)}
    res = search("q", t, oracle(t, {d: 1.0 for d in excluded}), SearchConfig(iterations=5), excluded)
    assert not excluded & set(res.doc_ids)
    for ev in res.trace:
        assert first not in ev.members
    assert len(res.doc_ids) == 6


def test_partial_exclusion_marks_pruned_fraction():
    t = balanced_tree([2, 4])
    first = t.children(t.root)[0]
    excluded = {t.nodes[t.children(first)[0]].doc_id}
    res = search("q", t, oracle(t, {}), SearchConfig(iterations=3), excluded)
    ev = next(e for e in res.trace if e.node == first)
    assert ev.pruned_fraction == pytest.approx(0.25)
    assert len(ev.members) >= 3


def test_path_relevance_recurrence():
    t = balanced_tree([3, 3])
    res = search("q", t, oracle(t, {"d0000004": 0.8}), SearchConfig(beam_size=1, iterations=2, ema_alpha=0.5))
    # noiseless: latent == clean score, so the leaf's value is the EMA along its path
    leaf = t.leaf_for_doc("d0000004")
    parent = t.parent(leaf)
    p_parent = 0.5 * 1.0 + 0.5 * 0.8
    assert dict(res.ranked)["d0000004"] == pytest.approx(0.5 * p_parent + 0.5 * 0.8, abs=1e-6)
    assert path_to_root(t, leaf)[1] == parent


def test_update_path_relevance_root_is_one():
    t = balanced_tree([2, 2])
    st_ = init_state(t, SearchConfig())
    assert update_path_relevance(st_, t, t.root, 0.5) == 1.0
    with pytest.raises(KeyError):
        update_path_relevance(st_, t, t.children(t.root)[0], 0.5)


def test_internal_slate_gets_best_sibling_anchor():
    t = balanced_tree([3, 3, 2])
    cfg = SearchConfig(beam_size=1, iterations=2)
    res = search("q", t, oracle(t, {"d0000000": 1.0, "d0000007": 0.6}), cfg)
    second = res.trace[1]
    kids = t.children(second.node)
    assert second.members[: len(kids)] == kids
    anchor = second.members[len(kids):]
    assert len(anchor) == 1 and t.parent(anchor[0]) == t.parent(second.node)


def test_leaf_slate_augmented_from_prediction_set():
    t = balanced_tree([4, 3])
    cfg = SearchConfig(beam_size=1, iterations=3, leaf_aug_count=2)
    res = search("q", t, oracle(t, {"d0000000": 1.0, "d0000004": 0.7}), cfg)
    leaf_slates = [e for e in res.trace if all(t.is_leaf(c) for c in t.children(e.node))]
    assert leaf_slates[0].members == t.children(leaf_slates[0].node)  # nothing to sample yet
    later = leaf_slates[1]
    extra = later.members[len(t.children(later.node)):]
    assert len(extra) == 2
    assert all(t.is_leaf(u) and t.parent(u) != later.node for u in extra)


def test_zero_augmentation_keeps_plain_slates():
    t = balanced_tree([4, 3])
    res = search("q", t, oracle(t, {"d0000000": 1.0}), SearchConfig(iterations=4, leaf_aug_count=0))
    for ev in res.trace:
        kids = t.children(ev.node)
        if all(t.is_leaf(c) for c in kids):
            assert ev.members == kids


def test_ties_break_by_node_id():
    t = balanced_tree([3, 2])
    res = search("q", t, oracle(t, {}), SearchConfig(beam_size=1, iterations=2))
    kids = t.children(t.root)
    assert res.trace[1].node == min(kids)


def test_search_is_deterministic():
    t = balanced_tree([5, 5, 4])
    gold = {"d0000011": 1.0, "d0000050": 0.8}
    cfg = SearchConfig(seed=9)
    mk = lambda: oracle(t, gold, slate_bias_range=(-0.15, 0.15), score_noise_sigma=0.1, seed=2)  # noqa: E731
    a, b = search("q", t, mk(), cfg), search("q", t, mk(), cfg)
    assert a.ranked == b.ranked
    assert trace_to_jsonl(a) == trace_to_jsonl(b)


def test_parallel_scoring_matches_serial():
    t = balanced_tree([5, 5, 4])
    gold = {"d0000011": 1.0, "d0000050": 0.8}
    mk = lambda: oracle(t, gold, slate_bias_range=(-0.15, 0.15), score_noise_sigma=0.1, seed=2)  # noqa: E731
    serial = search("q", t, mk(), SearchConfig(beam_size=3))
    parallel = search("q", t, mk(), SearchConfig(beam_size=3, max_workers=3))
    assert serial.ranked == parallel.ranked


def test_trace_round_trip_and_replay():
    t = balanced_tree([4, 4, 3])
    sc = oracle(t, {"d0000010": 1.0, "d0000030": 0.7}, slate_bias_range=(-0.1, 0.1), score_noise_sigma=0.05)
    cfg = SearchConfig(iterations=6)
    res = search("q", t, sc, cfg)
    events = trace_from_jsonl(trace_to_jsonl(res))
    assert [e.slate_id for e in events] == [e.slate_id for e in res.trace]
    again = replay(events, "q", t, cfg)
    assert again.ranked == res.ranked


class Flaky:
    def __init__(self, inner, fail_at):
        self.inner, self.fail_at, self.calls = inner, fail_at, 0

    def __call__(self, query, candidates, relevance_definition="", slate_id=0):
        self.calls += 1
        if self.calls > self.fail_at:
            raise ScorerError("quota exhausted")
        return self.inner(query, candidates, relevance_definition, slate_id)


def test_scorer_failure_aborts_with_partial_result():
    t = balanced_tree([3, 3, 3])
    sc = Flaky(oracle(t, {"d0000000": 1.0}), fail_at=3)
    with pytest.raises(SearchAborted) as err:
        search("q", t, sc, SearchConfig(beam_size=1, iterations=10))
    part = err.value.partial
    assert part.cost.scorer_calls == 3
    assert part.doc_ids[0] == "d0000000"


def test_wrong_score_count_is_a_scorer_error():
    t = balanced_tree([3, 3])

    def short(query, candidates, relevance_definition="", slate_id=0):
        return ScorerOutput([0.5])

    with pytest.raises(SearchAborted):
        search("q", t, short, SearchConfig())


def test_checkpoints_track_cost():
    t = balanced_tree([4, 4, 4])
    res = search("q", t, oracle(t, {"d0000020": 1.0}), SearchConfig(iterations=5))
    assert [c.iteration for c in res.checkpoints] == list(range(1, 6))
    calls = [c.scorer_calls for c in res.checkpoints]
    assert calls == sorted(calls) and calls[-1] == res.cost.scorer_calls
    toks = [c.input_tokens for c in res.checkpoints]
    assert toks == sorted(toks)


def test_calibration_modes_agree_without_noise():
    t = balanced_tree([5, 5, 4])
    gold = {"d0000011": 1.0, "d0000050": 0.75, "d0000070": 0.6}
    runs = {m: search("q", t, oracle(t, gold), SearchConfig(calibration=m)) for m in ("mle", "mean", "last")}
    assert runs["mle"].doc_ids[:3] == runs["last"].doc_ids[:3] == runs["mean"].doc_ids[:3]


def test_frontier_exhaustion_stops_early():
    t = balanced_tree([2, 2])
    res = search("q", t, oracle(t, {}), SearchConfig(beam_size=2, iterations=20))
    assert res.iterations_run == 2
    assert res.cost.scorer_calls == 3
    assert len(res.doc_ids) == 4


@given(
    shape=st.lists(st.integers(2, 5), min_size=1, max_size=3),
    beam=st.integers(1, 3),
    iters=st.integers(1, 6),
    seed=st.integers(0, 1000),
)
def test_budget_law_property(shape, beam, iters, seed):
    t = balanced_tree(shape)
    rng = np.random.default_rng(seed)
    leaves = sorted(t.nodes[v].doc_id for v in t.leaves())
    gold = {d: float(rng.uniform()) for d in rng.choice(leaves, min(3, len(leaves)), replace=False)}
    sc = oracle(t, gold, slate_bias_range=(-0.2, 0.2), score_noise_sigma=0.1, seed=seed)
    cfg = SearchConfig(beam_size=beam, iterations=iters, seed=seed)
    res = search("q", t, sc, cfg)
    assert res.cost.scorer_calls <= beam * iters
    assert len(set(res.doc_ids)) == len(res.doc_ids)
    for ev in res.trace:
        assert len(set(ev.members)) == len(ev.members)


def test_build_slate_empty_when_all_children_excluded():
    t = balanced_tree([2, 2])
    first = t.children(t.root)[0]
    st_ = init_state(t, SearchConfig(), {t.nodes[c].doc_id for c in t.children(first)})
    assert build_slate(first, st_, t, SearchConfig()) == []
    assert build_slate(t.root, st_, t, SearchConfig()) == [t.children(t.root)[1]]


def test_depth_one_tree_gold_first():
    from semtree.tree import Document, TreeBuilder

    b = TreeBuilder(6)
    leaves = [b.add_leaf(Document(f"x{i}", f"leaf {i}")) for i in range(6)]
    t = b.build(b.add_internal("", leaves))
    gold = {f"x{i}": 0.1 for i in range(6)} | {"x4": 1.0}
    res = search("q", t, oracle(t, gold), SearchConfig(beam_size=1, iterations=1, top_k=5))
    assert res.doc_ids[0] == "x4" and len(res.doc_ids) == 5


def test_leaf_sampling_follows_softmax_weights():
    from semtree.tree import Document, TreeBuilder

    b = TreeBuilder(2)
    la, lb = b.add_leaf(Document("a", "a")), b.add_leaf(Document("b", "b"))
    lc, ld = b.add_leaf(Document("c", "c")), b.add_leaf(Document("d", "d"))
    x, y = b.add_internal("x", [la, lb]), b.add_internal("y", [lc, ld])
    t = b.build(b.add_internal("", [x, y]))
    state = init_state(t, SearchConfig(leaf_aug_count=1, seed=3))
    state.pred = {la: 0.9, lb: 0.2}
    cfg = SearchConfig(leaf_aug_count=1)
    draws = [build_slate(y, state, t, cfg)[-1] for _ in range(10_000)]
    freq = draws.count(la) / len(draws)
    expected = np.exp(0.9) / (np.exp(0.9) + np.exp(0.2))
    assert abs(freq - expected) <= 0.02


def test_final_ranking_uses_post_solve_values():
    from semtree.traversal import expand_beam, finalize

    t = balanced_tree([2, 3])
    cfg = SearchConfig(beam_size=2, iterations=3, leaf_aug_count=2, ema_alpha=0.5)
    scorer = oracle(t, {"d0000001": 0.9, "d0000004": 0.6}, slate_bias_range=(-0.2, 0.2), score_noise_sigma=0.05, seed=2)
    state = init_state(t, cfg)
    for _ in range(cfg.iterations):
        expand_beam(state, t, scorer, cfg, "q")
    model = state.calibration
    for v, p in state.pred.items():
        parent = t.parent(v)
        mid = 0.5 * 1.0 + 0.5 * model.latent[parent]
        assert p == pytest.approx(0.5 * mid + 0.5 * model.latent[v], abs=1e-12)
    ranked = finalize(state, t, cfg).ranked
    assert [d for d, _ in ranked] == [t.nodes[v].doc_id for v in sorted(state.pred, key=lambda v: (-state.pred[v], v))]
