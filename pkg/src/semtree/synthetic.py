"""Synthetic trees, corpora and planted-relevance query sets.

Used by the simulation command, the demos and the test-suite. Everything
here is seeded and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tree import Corpus, Document, SemanticTree, TreeBuilder


def balanced_tree(shape: Sequence[int], max_branching: int | None = None, n_leaves: int | None = None) -> SemanticTree:
    """Tree whose level ``k`` nodes each have ``shape[k]`` children.

    ``n_leaves`` trims the last level so the corpus size can be set freely
    while keeping depth and branching fixed; leaves are spread evenly over
    the bottom-level parents.
    """
    M = max_branching or max(shape)
    full = math.prod(shape)
    n_leaves = full if n_leaves is None else n_leaves
    if not 1 <= n_leaves <= full:
        raise ValueError(f"n_leaves must be in [1, {full}]")
    b = TreeBuilder(M)
    root = b.add_internal("")
    layer = [(root, "")]
    for width in shape[:-1]:
        nxt = []
        for parent, label in layer:
            for j in range(width):
                lab = f"{label}.{j}" if label else str(j)
                vid = b.add_internal(f"topic {lab}")
                b.attach(parent, vid)
                nxt.append((vid, lab))
        layer = nxt
    n_parents = len(layer)
    base, extra = divmod(n_leaves, n_parents)
    d = 0
    for k, (parent, label) in enumerate(layer):
        for j in range(base + (k < extra)):
            leaf = b.add_leaf(Document(f"d{d:07d}", f"document {label}.{j}"))
            b.attach(parent, leaf)
            d += 1
    return b.build(root)


@dataclass
class PlantedQuery:
    query_id: str
    text: str
    gains: dict[str, int]
    relevance: dict[str, float]
    excluded: set[str]


def planted_queries(
    tree: SemanticTree,
    n_queries: int,
    n_gold: int = 6,
    n_gold_clusters: int = 2,
    max_gain: int = 2,
    n_distractors: int = 100,
    distractor_range: tuple[float, float] = (0.2, 0.7),
    seed: int = 0,
) -> list[PlantedQuery]:
    """Queries whose gold leaves sit in a few topically coherent clusters.

    For each query ``n_gold_clusters`` bottom-level clusters are picked and
    ``n_gold`` leaves drawn from them, with graded gains ``1..max_gain`` and
    oracle relevance ``0.5 + 0.5 * gain / max_gain``. ``n_distractors``
    further leaves anywhere in the tree get unjudged partial relevance drawn
    uniformly from ``distractor_range``.
    """
    rng = np.random.default_rng(seed)
    clusters = sorted(v for v in tree.internal_nodes() if any(tree.is_leaf(c) for c in tree.children(v)))
    all_docs = sorted(tree.nodes[v].doc_id for v in tree.leaves())
    out = []
    for q in range(n_queries):
        picked = rng.choice(len(clusters), size=min(n_gold_clusters, len(clusters)), replace=False)
        pool = [tree.nodes[c].doc_id for i in picked for c in tree.children(clusters[i]) if tree.is_leaf(c)]
        gold = rng.choice(pool, size=min(n_gold, len(pool)), replace=False)
        gains = {str(d): int(rng.integers(1, max_gain + 1)) for d in gold}
        rel = {d: 0.5 + 0.5 * g / max_gain for d, g in gains.items()}
        lo, hi = distractor_range
        for d in rng.choice(all_docs, size=min(n_distractors, len(all_docs)), replace=False):
            if str(d) not in rel:
                rel[str(d)] = float(rng.uniform(lo, hi))
        out.append(PlantedQuery(f"q{q:04d}", f"synthetic query {q}", gains, rel, set()))
    return out


# -- text corpora --------------------------------------------------------------

_SYLLABLES = ["ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "pa", "qu", "do", "fe", "gi", "ha", "jo"]


def _word(rng: np.random.Generator, n_syl: int = 3) -> str:
    return "".join(rng.choice(_SYLLABLES, size=n_syl))


@dataclass
class SyntheticCorpus:
    corpus: Corpus
    topic_of: dict[str, int]
    topic_words: list[list[str]]


def topic_corpus(
    n_topics: int = 4,
    docs_per_topic: int = 30,
    words_per_doc: int = 30,
    topic_vocab: int = 12,
    shared_vocab: int = 40,
    topic_share: float = 0.7,
    passages_per_source: int = 0,
    seed: int = 0,
) -> SyntheticCorpus:
    """Documents drawn from per-topic vocabularies mixed with shared filler words.

    With ``passages_per_source > 0`` documents of a topic are grouped into
    sources carrying ``source_id``/``source_position`` metadata.
    """
    rng = np.random.default_rng(seed)
    words: set[str] = set()

    def fresh(n):
        out = []
        while len(out) < n:
            w = _word(rng)
            if w not in words:
                words.add(w)
                out.append(w)
        return out

    topics = [fresh(topic_vocab) for _ in range(n_topics)]
    shared = fresh(shared_vocab)
    docs, topic_of = [], {}
    for t in range(n_topics):
        for j in range(docs_per_topic):
            n_topic = rng.binomial(words_per_doc, topic_share)
            toks = list(rng.choice(topics[t], n_topic)) + list(rng.choice(shared, words_per_doc - n_topic))
            rng.shuffle(toks)
            did = f"t{t}-d{j:04d}"
            src = pos = None
            if passages_per_source:
                src, pos = f"t{t}-s{j // passages_per_source}", j % passages_per_source
            docs.append(Document(did, " ".join(toks), src, pos))
            topic_of[did] = t
    return SyntheticCorpus(Corpus(docs), topic_of, topics)
