"""Agglomerative construction: embed, cluster and summarise one layer at a time."""

from __future__ import annotations

import itertools
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .. import prompts
from ..llm import LlmClient, as_client
from ..tree import Corpus, NodeId, SemanticTree, TreeBuilder
from .clustering import Partition, check_partition, chunk_partition, default_clustering
from .embeddings import EmbeddingFn, HashEmbedder, embed_all
from .manifest import BuildManifest

logger = logging.getLogger(__name__)

Summarizer = Callable[[Sequence[str]], str]
LayerClustering = Callable[[np.ndarray, int], Partition]

DEFAULT_MAX_BRANCHING = 16
DEFAULT_SUMMARY_CHAR_BUDGET = 24_000


class ConstructionError(RuntimeError):
    pass


class LlmSummarizer:
    """Summarise a group of child texts with the children-summary prompt.

    Each call gets a fresh, increasing prompt id.
    """

    def __init__(self, client: LlmClient, template: str | None = None):
        self.client = as_client(client)
        self.template = template if template is not None else prompts.load_template(prompts.SUMMARIZE_CHILDREN)
        self._ids = itertools.count()
        self._lock = threading.Lock()

    def __call__(self, child_texts: Sequence[str]) -> str:
        with self._lock:
            pid = next(self._ids)
        prompt = prompts.render_summarize_prompt(child_texts, pid, self.template)
        summary, *_ = self.client.request(prompt, prompts.parse_summary_response)
        return summary


def create_nodes_from_clusters(
    source_layer: Sequence[NodeId], clusters: Sequence[Sequence[NodeId]], builder: TreeBuilder
) -> list[NodeId]:
    """One new parent per cluster; ``clusters`` must partition ``source_layer``."""
    source = list(source_layer)
    pos = {v: i for i, v in enumerate(source)}
    try:
        check_partition([[pos[v] for v in c] for c in clusters], len(source))
    except KeyError as e:
        raise ValueError(f"cluster member {e.args[0]!r} is not in the source layer") from None
    return [builder.add_internal("", c) for c in clusters]


def metadata_initial_clusters(corpus: Corpus, max_size: int) -> list[list[str]]:
    """Group passages by source; split large sources into balanced contiguous runs."""
    by_source: dict[str, list] = {}
    for d in corpus:
        if d.source_id is None or d.source_position is None:
            raise ValueError(f"document {d.doc_id!r} lacks source_id/source_position")
        by_source.setdefault(d.source_id, []).append(d)
    parts = []
    for docs in by_source.values():
        docs.sort(key=lambda d: (d.source_position, d.doc_id))
        for run in chunk_partition(len(docs), max_size):
            parts.append([docs[i].doc_id for i in run])
    return parts


def build_bottom_up(
    corpus: Corpus,
    embed: EmbeddingFn | None = None,
    cluster: LayerClustering | None = None,
    summarize: Summarizer | None = None,
    max_branching: int = DEFAULT_MAX_BRANCHING,
    initial_clusters: Sequence[Sequence[str]] | None = None,
    seed: int = 0,
    summary_char_budget: int | None = DEFAULT_SUMMARY_CHAR_BUDGET,
    max_workers: int = 1,
    manifest: BuildManifest | None = None,
) -> SemanticTree:
    """Build a tree bottom-up.

    ``cluster(vectors, M)`` must return a partition of row indices into parts
    of at most ``M``. If it leaves a layer no smaller, the layer is chunked
    into balanced contiguous runs instead (flagged in the manifest).
    """
    M = max_branching
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    if M < 2:
        raise ValueError("max_branching must be >= 2")
    if summarize is None:
        raise ValueError("a summarizer is required")
    embed = embed or HashEmbedder()
    if cluster is None:
        cluster = lambda X, m, _s=seed: default_clustering(X, m, _s)  # noqa: E731
    man = manifest if manifest is not None else BuildManifest()
    man.method = "bottom_up"
    man.params = {"max_branching": M, "seed": seed, "summary_char_budget": summary_char_budget}

    b = TreeBuilder(M)
    leaves = [b.add_leaf(d) for d in corpus]
    leaf_of = {d.doc_id: v for d, v in zip(corpus, leaves)}
    man.layers.append({"layer": 0, "size": len(leaves)})

    if len(leaves) <= M:
        root = b.add_internal("", leaves)
        man.layers.append({"layer": 1, "size": 1, "root": root})
        return b.build(root)

    def text(v):
        return b.nodes[v].text

    def summarize_layer(layer: list[NodeId], k: int) -> None:
        def one(v):
            kids = [text(c) for c in b.nodes[v].children]
            kids = prompts.fit_texts_to_budget(kids, summary_char_budget)
            try:
                s = summarize(kids)
            except Exception as e:
                raise ConstructionError(f"layer {k}: summarizing node {v} failed: {e}") from e
            if not s or not s.strip():
                raise ConstructionError(f"layer {k}: empty summary for node {v}")
            return s.strip()

        if max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                out = list(pool.map(one, layer))
        else:
            out = [one(v) for v in layer]
        for v, s in zip(layer, out):
            b.nodes[v].text = s
            man.event("summarize", layer=k, node=v, children=len(b.nodes[v].children))
        man.llm_calls += len(layer)

    def cluster_layer(layer: list[NodeId], k: int) -> list[list[NodeId]]:
        try:
            X = embed_all(embed, [text(v) for v in layer])
        except Exception as e:
            raise ConstructionError(f"layer {k}: embedding failed: {e}") from e
        man.event("embed", layer=k, size=len(layer), dim=int(X.shape[1]) if X.size else 0)
        try:
            parts = cluster(X, M)
            check_partition(parts, len(layer), M)
        except Exception as e:
            raise ConstructionError(f"layer {k}: clustering failed: {e}") from e
        if len(layer) > M and len(parts) >= len(layer):
            man.flag(f"layer {k}: clustering made no progress; chunked instead")
            logger.warning("layer %d: clustering made no progress (%d parts); chunking", k, len(parts))
            parts = chunk_partition(len(layer), M)
        man.event("cluster", layer=k, parts=len(parts))
        return [[layer[i] for i in p] for p in parts]

    k = 1
    if initial_clusters is not None:
        try:
            clusters = [[leaf_of[d] for d in part] for part in initial_clusters]
        except KeyError as e:
            raise ValueError(f"initial clusters reference unknown doc {e.args[0]!r}") from None
        for part in clusters:
            if len(part) > M:
                raise ValueError(f"initial cluster of size {len(part)} exceeds max_branching {M}")
        man.event("initial_clusters", parts=len(clusters))
    else:
        clusters = cluster_layer(leaves, 0)
    current = create_nodes_from_clusters(leaves, clusters, b)
    man.layers.append({"layer": k, "size": len(current), "clusters": [list(c) for c in clusters]})

    while len(current) > M:
        summarize_layer(current, k)
        clusters = cluster_layer(current, k)
        current = create_nodes_from_clusters(current, clusters, b)
        k += 1
        man.layers.append({"layer": k, "size": len(current), "clusters": [list(c) for c in clusters]})
    summarize_layer(current, k)

    root = b.add_internal("", current)
    man.layers.append({"layer": k + 1, "size": 1, "root": root})
    logger.info("bottom-up build: %d leaves, %d layers, %d summaries", len(leaves), k + 1, man.llm_calls)
    return b.build(root)
