"""Best-first beam search over a semantic tree with calibrated path relevance."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .calibration import (
    CalibrationModel,
    ScoreHistory,
    SlateRecord,
    SolverConfig,
    last_score_model,
    record_slate,
    solve_mle,
)
from .scoring import Candidate, ListwiseScorer, ScorerError, ScorerOutput
from .tree import NodeId, SemanticTree

logger = logging.getLogger(__name__)

CALIBRATION_MODES = ("mle", "mean", "last")


@dataclass(frozen=True)
class SearchConfig:
    beam_size: int = 2
    iterations: int = 20
    ema_alpha: float = 0.5
    leaf_aug_count: int = 10
    top_k: int = 100
    relevance_definition: str = ""
    seed: int = 0
    calibration: str = "mle"
    solver: SolverConfig = SolverConfig()
    max_workers: int = 1

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 <= self.ema_alpha <= 1.0:
            raise ValueError("ema_alpha must lie in [0, 1]")
        if self.leaf_aug_count < 0:
            raise ValueError("leaf_aug_count must be >= 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.calibration not in CALIBRATION_MODES:
            raise ValueError(f"calibration must be one of {CALIBRATION_MODES}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        d = dict(d)
        if isinstance(d.get("solver"), dict):
            d["solver"] = SolverConfig(**d["solver"])
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class CostLedger:
    scorer_calls: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    leaves_evaluated: int = 0

    def add(self, out: ScorerOutput, n_leaves: int) -> None:
        self.scorer_calls += 1
        self.input_tokens += out.input_tokens
        self.output_tokens += out.output_tokens
        self.leaves_evaluated += n_leaves


@dataclass
class ExpansionEvent:
    iteration: int
    node: NodeId
    priority: float
    frontier_max: float
    slate_id: int | None
    members: list[NodeId]
    observed: list[float]
    fitted: list[float] = field(default_factory=list)
    skipped: bool = False
    pruned_fraction: float = 0.0


@dataclass
class Checkpoint:
    iteration: int
    scorer_calls: int
    input_tokens: int
    ranked: list[str]


@dataclass
class SearchResult:
    ranked: list[tuple[str, float]]
    cost: CostLedger
    trace: list[ExpansionEvent]
    checkpoints: list[Checkpoint]
    iterations_run: int

    @property
    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.ranked]


class SearchAborted(RuntimeError):
    def __init__(self, message: str, partial: SearchResult):
        super().__init__(message)
        self.partial = partial


@dataclass
class SearchState:
    frontier: dict[NodeId, float]
    pred: dict[NodeId, float]
    history: ScoreHistory
    calibration: CalibrationModel | None
    path_rel: dict[NodeId, float]
    cost: CostLedger
    rng: np.random.Generator
    expanded: set[NodeId] = field(default_factory=set)
    trace: list[ExpansionEvent] = field(default_factory=list)
    checkpoints: list[Checkpoint] = field(default_factory=list)
    next_slate_id: int = 0
    iteration: int = 0
    excluded: frozenset[NodeId] = frozenset()
    pruned: dict[NodeId, float] = field(default_factory=dict)

    def latent(self, v: NodeId) -> float | None:
        return self.calibration.latent.get(v) if self.calibration is not None else None


def init_state(tree: SemanticTree, config: SearchConfig, excluded_docs: Iterable[str] = ()) -> SearchState:
    excluded_docs = set(excluded_docs)
    excluded = frozenset(v for v in tree.leaves() if tree.nodes[v].doc_id in excluded_docs)
    state = SearchState(
        frontier={tree.root: 1.0},
        pred={},
        history=ScoreHistory(),
        calibration=None,
        path_rel={tree.root: 1.0},
        cost=CostLedger(),
        rng=np.random.default_rng(config.seed),
        excluded=excluded,
    )
    if excluded:
        state.pruned = _pruned_fractions(tree, excluded)
    return state


def _pruned_fractions(tree: SemanticTree, excluded: frozenset[NodeId]) -> dict[NodeId, float]:
    """Fraction of each internal node's leaves that are excluded (1.0 = fully pruned)."""
    total: dict[NodeId, int] = {}
    gone: dict[NodeId, int] = {}
    for v in reversed(list(tree.bfs())):
        n = tree.nodes[v]
        if n.is_leaf:
            total[v], gone[v] = 1, int(v in excluded)
        else:
            total[v] = sum(total[c] for c in n.children)
            gone[v] = sum(gone[c] for c in n.children)
    return {v: gone[v] / total[v] for v in total if not tree.nodes[v].is_leaf}


def _alive(state: SearchState, tree: SemanticTree, v: NodeId) -> bool:
    if v in state.excluded:
        return False
    return state.pruned.get(v, 0.0) < 1.0


def _pop_order(entries: dict[NodeId, float]) -> list[NodeId]:
    return sorted(entries, key=lambda v: (-entries[v], v))


def build_slate(v: NodeId, state: SearchState, tree: SemanticTree, config: SearchConfig) -> list[NodeId]:
    """Children of ``v`` that survive exclusion, plus calibration anchors.

    Leaf-style children get up to ``leaf_aug_count`` leaves sampled from the
    prediction set with weights ``exp(path_relevance)``; internal children
    get the best already-scored sibling of ``v``. An empty list means every
    child was excluded.
    """
    kids = [c for c in tree.children(v) if _alive(state, tree, c)]
    if not kids:
        return []
    n_leaf = sum(tree.is_leaf(c) for c in kids)
    in_slate = set(kids)
    if 2 * n_leaf >= len(kids):
        pool = sorted(u for u in state.pred if u not in in_slate)
        k = min(config.leaf_aug_count, len(pool))
        if k == 0:
            return kids
        p = np.array([state.pred[u] for u in pool])
        w = np.exp(p - p.max())
        picks = state.rng.choice(len(pool), size=k, replace=False, p=w / w.sum())
        return kids + [pool[i] for i in picks]

    parent = tree.parent(v)
    if parent is None:
        return kids
    siblings = [
        u for u in tree.children(parent)
        if u != v and u in state.path_rel and state.latent(u) is not None and _alive(state, tree, u)
    ]
    if not siblings:
        return kids
    best = min(siblings, key=lambda u: (-state.path_rel[u], u))
    return kids + [best]


def update_path_relevance(state: SearchState, tree: SemanticTree, v: NodeId, alpha: float) -> float:
    """Set ``path_rel[v] = alpha * path_rel[parent] + (1 - alpha) * latent[v]``."""
    parent = tree.parent(v)
    if parent is None:
        state.path_rel[v] = 1.0
        return 1.0
    s = state.latent(v)
    if s is None:
        raise KeyError(f"node {v!r} has no latent score")
    p = alpha * state.path_rel[parent] + (1.0 - alpha) * s
    state.path_rel[v] = p
    return p


def refresh_path_relevance(state: SearchState, tree: SemanticTree, nodes: Iterable[NodeId], alpha: float) -> None:
    """Recompute path relevance of ``nodes`` along their ancestor chains."""
    done: set[NodeId] = {tree.root}
    for v in nodes:
        chain = []
        u = v
        while u not in done:
            chain.append(u)
            u = tree.parent(u)
        for u in reversed(chain):
            update_path_relevance(state, tree, u, alpha)
            done.add(u)
    for v in state.frontier:
        state.frontier[v] = state.path_rel[v]
    for v in state.pred:
        state.pred[v] = state.path_rel[v]


def _solve(state: SearchState, config: SearchConfig) -> CalibrationModel:
    if config.calibration == "last":
        return last_score_model(state.history)
    if config.calibration == "mean":
        return solve_mle(state.history, SolverConfig.mean_only())
    return solve_mle(state.history, config.solver, warm_start=state.calibration)


def _score(scorer: ListwiseScorer, query: str, tree: SemanticTree, config: SearchConfig, jobs):
    def run(job):
        slate_id, members = job
        cands = [Candidate(u, tree.text(u)) for u in members]
        out = scorer(query, cands, config.relevance_definition, slate_id)
        if len(out.scores) != len(members):
            raise ScorerError(f"scorer returned {len(out.scores)} scores for {len(members)} candidates")
        return out

    if config.max_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def expand_beam(
    state: SearchState, tree: SemanticTree, scorer: ListwiseScorer, config: SearchConfig, query: str
) -> SearchState:
    state.iteration += 1
    order = _pop_order(state.frontier)
    beam = order[: config.beam_size]
    events: list[ExpansionEvent] = []
    jobs = []
    for k, v in enumerate(beam):
        prio = state.frontier.pop(v)
        frontier_max = max([prio] + [state.frontier[u] for u in order[k + 1 :]])
        state.expanded.add(v)
        members = build_slate(v, state, tree, config)
        ev = ExpansionEvent(
            state.iteration, v, prio, frontier_max, None, members, [],
            skipped=not members, pruned_fraction=state.pruned.get(v, 0.0),
        )
        if members:
            ev.slate_id = state.next_slate_id
            state.next_slate_id += 1
            jobs.append((ev.slate_id, members))
        events.append(ev)
    state.trace.extend(events)

    outputs = _score(scorer, query, tree, config, jobs)
    scored = [e for e in events if not e.skipped]
    for ev, out in zip(scored, outputs):
        ev.observed = [float(s) for s in out.scores]
        record_slate(state.history, SlateRecord(ev.slate_id, tuple(zip(ev.members, ev.observed))))
        state.cost.add(out, sum(tree.is_leaf(u) for u in ev.members))

    if scored:
        state.calibration = _solve(state, config)
        touched = []
        for ev in scored:
            ev.fitted = [state.calibration.latent[u] for u in ev.members]
            touched.extend(ev.members)
            for c in tree.children(ev.node):
                if c not in ev.members:
                    continue
                if tree.is_leaf(c):
                    state.pred[c] = 0.0
                elif c not in state.expanded:
                    state.frontier[c] = 0.0
        refresh_path_relevance(
            state, tree, list(dict.fromkeys(touched + list(state.frontier) + list(state.pred))), config.ema_alpha
        )
    state.checkpoints.append(
        Checkpoint(state.iteration, state.cost.scorer_calls, state.cost.input_tokens, _ranked_docs(state, tree, config))
    )
    return state


def _ranked(state: SearchState, tree: SemanticTree, config: SearchConfig) -> list[tuple[str, float]]:
    order = _pop_order(state.pred)[: config.top_k]
    return [(tree.nodes[v].doc_id, state.pred[v]) for v in order]


def _ranked_docs(state, tree, config) -> list[str]:
    return [d for d, _ in _ranked(state, tree, config)]


def finalize(state: SearchState, tree: SemanticTree, config: SearchConfig) -> SearchResult:
    return SearchResult(_ranked(state, tree, config), state.cost, state.trace, state.checkpoints, state.iteration)


def search(
    query: str,
    tree: SemanticTree,
    scorer: ListwiseScorer,
    config: SearchConfig | None = None,
    excluded: Iterable[str] = (),
) -> SearchResult:
    """Run up to ``config.iterations`` beam expansions and return the top-K leaves."""
    config = config or SearchConfig()
    state = init_state(tree, config, excluded)
    for _ in range(config.iterations):
        if not state.frontier:
            break
        try:
            expand_beam(state, tree, scorer, config, query)
        except ScorerError as e:
            raise SearchAborted(f"scorer failed at iteration {state.iteration}: {e}", finalize(state, tree, config)) from e
    return finalize(state, tree, config)


# -- trace export / replay ---------------------------------------------------


def trace_to_jsonl(result: SearchResult) -> str:
    return "".join(json.dumps(asdict(ev), sort_keys=True) + "\n" for ev in result.trace)


def trace_from_jsonl(text: str) -> list[ExpansionEvent]:
    return [ExpansionEvent(**json.loads(line)) for line in text.splitlines() if line.strip()]


class ReplayScorer:
    """Answers each slate with the scores recorded in a trace."""

    def __init__(self, events: Sequence[ExpansionEvent]):
        self._by_slate = {e.slate_id: e for e in events if not e.skipped}

    def __call__(self, query, candidates, relevance_definition="", slate_id=0) -> ScorerOutput:
        ev = self._by_slate.get(slate_id)
        if ev is None or [c.node_id for c in candidates] != ev.members:
            raise ScorerError(f"slate {slate_id} does not match the recorded trace")
        return ScorerOutput(list(ev.observed))


def replay(
    events: Sequence[ExpansionEvent], query: str, tree: SemanticTree, config: SearchConfig, excluded: Iterable[str] = ()
) -> SearchResult:
    """Re-derive the ranking from a recorded trace without calling any model."""
    n_iter = max((e.iteration for e in events), default=0)
    return search(query, tree, ReplayScorer(events), replace(config, iterations=max(1, n_iter)), excluded)
