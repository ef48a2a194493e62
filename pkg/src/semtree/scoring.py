"""Listwise scorer interface and the synthetic oracle backend."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np

from .tree import NodeId, SemanticTree


class ScorerError(RuntimeError):
    """A scorer gave up on a slate (after its own retries)."""

    def __init__(self, message: str, raw: str | None = None):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class Candidate:
    node_id: NodeId
    text: str


@dataclass
class ScorerOutput:
    scores: list[float]
    reasoning: str | None = None
    ranking: list[int] | None = None
    input_tokens: int = 0
    output_tokens: int = 0
    flags: list[str] = field(default_factory=list)


class ListwiseScorer(Protocol):
    def __call__(
        self,
        query: str,
        candidates: Sequence[Candidate],
        relevance_definition: str = "",
        slate_id: int = 0,
    ) -> ScorerOutput: ...


def estimate_tokens(text: str | int, chars_per_token: float = 4.0) -> int:
    """Length-based token estimate; accepts a string or a character count."""
    n = text if isinstance(text, int) else len(text)
    return int(np.ceil(n / chars_per_token))


@dataclass(frozen=True)
class OracleConfig:
    gold_relevance: Mapping[str, float]
    aggregation: str = "max"
    slate_bias_range: tuple[float, float] = (0.0, 0.0)
    score_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.aggregation not in ("max", "mean"):
            raise ValueError(f"aggregation must be 'max' or 'mean', got {self.aggregation!r}")
        if self.score_noise_sigma < 0:
            raise ValueError("score_noise_sigma must be >= 0")
        lo, hi = self.slate_bias_range
        if lo > hi:
            raise ValueError("slate_bias_range must be (low, high) with low <= high")


class OracleScorer:
    """Deterministic test double that knows the true relevance of every leaf.

    A node's clean score aggregates the gold relevance of its leaf
    descendants. Each slate adds one bias draw (keyed by ``slate_id``) and
    independent Gaussian noise per candidate, then clamps to [0, 1].
    """

    def __init__(self, tree: SemanticTree, config: OracleConfig):
        self.tree = tree
        self.config = config
        self.base = self._aggregate()

    def _aggregate(self) -> dict[NodeId, float]:
        gold = self.config.gold_relevance
        use_max = self.config.aggregation == "max"
        base: dict[NodeId, float] = {}
        counts: dict[NodeId, int] = {}
        # children before parents: reversed BFS order
        for v in reversed(list(self.tree.bfs())):
            n = self.tree.nodes[v]
            if n.is_leaf:
                base[v] = float(min(1.0, max(0.0, gold.get(n.doc_id, 0.0))))
                counts[v] = 1
            elif use_max:
                base[v] = max(base[c] for c in n.children)
                counts[v] = 1
            else:
                counts[v] = sum(counts[c] for c in n.children)
                base[v] = sum(base[c] * counts[c] for c in n.children) / counts[v]
        return base

    def clean_score(self, v: NodeId) -> float:
        return self.base[v]

    def __call__(self, query, candidates, relevance_definition="", slate_id=0) -> ScorerOutput:
        cfg = self.config
        rng = np.random.default_rng([cfg.seed, slate_id, zlib.crc32(query.encode("utf-8"))])
        lo, hi = cfg.slate_bias_range
        bias = rng.uniform(lo, hi) if hi > lo else lo
        noise = rng.normal(0.0, cfg.score_noise_sigma, len(candidates)) if cfg.score_noise_sigma else np.zeros(len(candidates))
        scores = [float(np.clip(self.base[c.node_id] + bias + e, 0.0, 1.0)) for c, e in zip(candidates, noise)]
        prompt_chars = len(query) + sum(len(c.text) for c in candidates)
        return ScorerOutput(
            scores=scores,
            ranking=sorted(range(len(scores)), key=lambda k: (-scores[k], k)),
            input_tokens=estimate_tokens(prompt_chars),
            output_tokens=8 * len(candidates),
        )
