"""Divisive construction: group leaves by their keyword summaries, recursively."""

from __future__ import annotations

import logging
import math
import re
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .. import prompts
from ..llm import LlmClient, as_client
from ..scoring import estimate_tokens
from ..tree import NUM_SUMMARY_LEVELS, Corpus, Document, NodeId, SemanticTree, TreeBuilder
from .bottom_up import DEFAULT_MAX_BRANCHING
from .manifest import BuildManifest

logger = logging.getLogger(__name__)

# inclusive word-count targets per level, most abstract first
LEVEL_WORD_RANGES = ((1, 2), (3, 4), (4, 6), (7, 10), (11, 20))
MISC_TOPIC = "misc"


@dataclass(frozen=True)
class MultiLevelSummary:
    levels: tuple[str, ...]

    def __post_init__(self):
        if len(self.levels) != NUM_SUMMARY_LEVELS:
            raise ValueError(f"expected {NUM_SUMMARY_LEVELS} levels, got {len(self.levels)}")

    def level(self, i: int) -> str:
        """1-based: level 1 is the most abstract."""
        return self.levels[i - 1]

    def length_warnings(self) -> list[str]:
        out = []
        for i, (text, (lo, hi)) in enumerate(zip(self.levels, LEVEL_WORD_RANGES), start=1):
            n = len(text.split())
            if not lo <= n <= hi:
                out.append(f"level {i} has {n} words, expected {lo}-{hi}")
        return out


@dataclass
class Topic:
    name: str
    description: str


@dataclass
class TopicClustering:
    topics: list[Topic]
    mapping: dict[str, int]
    flags: list[str] = field(default_factory=list)
    call_id: int | None = None

    def members(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in self.topics]
        for kw, t in self.mapping.items():
            out[t].append(kw)
        return out


def generate_multilevel_summaries(
    docs: Sequence[Document],
    llm: LlmClient,
    batch_size: int = 8,
    max_chars_per_passage: int | None = 4000,
    max_workers: int = 1,
    template: str | None = None,
) -> dict[str, MultiLevelSummary]:
    """Five keyword levels per document, requested in batches.

    Passage ids in a prompt are positions within ``docs``; replies are matched
    by id, so the model may list them in any order.
    """
    client = as_client(llm)
    template = template if template is not None else prompts.load_template(prompts.MULTILEVEL_KEYWORDS)
    for d in docs:
        if not d.content.strip():
            raise ValueError(f"document {d.doc_id!r} has empty content")
    batches = [list(range(i, min(i + batch_size, len(docs)))) for i in range(0, len(docs), batch_size)]

    def run(batch: list[int]) -> dict[int, list[str]]:
        prompt = prompts.render_keywords_prompt(
            [(i, docs[i].content) for i in batch], max_chars_per_passage, template
        )
        parsed, *_ = client.request(prompt, lambda raw: prompts.parse_keywords_response(raw, batch))
        return parsed

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(b) for b in batches]
    out: dict[str, MultiLevelSummary] = {}
    for res in results:
        for i, levels in res.items():
            s = MultiLevelSummary(tuple(levels))
            for w in s.length_warnings():
                logger.debug("doc %s: %s", docs[i].doc_id, w)
            out[docs[i].doc_id] = s
    return out


def _level_tokens(strings: Sequence[str], chars_per_token: float) -> int:
    return estimate_tokens(sum(len(s) for s in strings), chars_per_token)


def select_summary_level(
    summaries: Sequence[MultiLevelSummary],
    max_branching: int,
    max_tokens: int,
    chars_per_token: float = 4.0,
) -> tuple[int, bool]:
    """Pick the keyword level used to cluster a set of leaves.

    Returns ``(level, truncated)``: the most abstract level with more than
    ``max_branching`` distinct strings that fits ``max_tokens``; failing that
    the most specific level that fits; failing that level 1 with
    ``truncated=True``.
    """
    fitting = []
    for i in range(1, NUM_SUMMARY_LEVELS + 1):
        unique = sorted({s.level(i) for s in summaries})
        if _level_tokens(unique, chars_per_token) > max_tokens:
            continue
        if len(unique) > max_branching:
            return i, False
        fitting.append(i)
    if fitting:
        return fitting[-1], False
    return 1, True


def _normalize(s: str) -> str:
    return re.sub(r"\s+", " ", s.strip().lower())


def cluster_llm(
    keywords_with_counts: Sequence[tuple[str, int]],
    min_k: int,
    max_k: int,
    llm: LlmClient,
    template: str | None = None,
    call_id: int | None = None,
) -> TopicClustering:
    """Ask the model to group keywords into ``min_k..max_k`` topics.

    A keyword listed under several topics stays with the first; keywords the
    model leaves out go to a synthetic ``misc`` topic. Both cases are flagged.
    """
    if not keywords_with_counts:
        raise ValueError("no keywords to cluster")
    client = as_client(llm)
    prompt = prompts.render_cluster_prompt(keywords_with_counts, min_k, max_k, template)
    raw_clusters, *_ = client.request(prompt, prompts.parse_cluster_response)

    inputs = [k for k, _ in keywords_with_counts]
    exact = set(inputs)
    loose = {}
    for k in inputs:
        loose.setdefault(_normalize(k), k)
    topics: list[Topic] = []
    mapping: dict[str, int] = {}
    flags: list[str] = []
    for rc in raw_clusters:
        members = []
        for kw in rc.keywords:
            key = kw if kw in exact else loose.get(_normalize(kw))
            if key is None:
                flags.append(f"unknown keyword {kw!r}")
                continue
            if key in mapping or key in members:
                flags.append(f"duplicate keyword {key!r}")
                continue
            members.append(key)
        if not members:
            continue
        t = len(topics)
        topics.append(Topic(rc.name or rc.description, rc.description or rc.name))
        for m in members:
            mapping[m] = t
    missing = [k for k in inputs if k not in mapping]
    if missing:
        flags.append(f"{len(missing)} keywords unassigned; placed in {MISC_TOPIC!r}")
        t = len(topics)
        topics.append(Topic(MISC_TOPIC, "; ".join(missing[:20])))
        for k in missing:
            mapping[k] = t
    if not min_k <= len(topics) <= max_k:
        flags.append(f"{len(topics)} topics outside requested range [{min_k}, {max_k}]")
    return TopicClustering(topics, mapping, flags, call_id)


def _forced_split(leaves: list[NodeId], key: Mapping[NodeId, str], max_branching: int) -> list[list[NodeId]]:
    n = len(leaves)
    k = min(max_branching, max(2, math.ceil(n / max_branching)))
    order = sorted(leaves, key=lambda v: (key[v], v))
    bounds = [round(j * n / k) for j in range(k + 1)]
    return [order[bounds[j] : bounds[j + 1]] for j in range(k)]


def _describe(strings: Sequence[str], limit: int = 600) -> str:
    return prompts.truncate("; ".join(dict.fromkeys(strings)), limit)


def build_top_down(
    corpus: Corpus,
    summarizer_llm: LlmClient,
    cluster_client: LlmClient,
    max_branching: int = DEFAULT_MAX_BRANCHING,
    max_tokens: int = 32_000,
    chars_per_token: float = 4.0,
    batch_size: int = 8,
    max_workers: int = 1,
    summaries: Mapping[str, MultiLevelSummary] | None = None,
    manifest: BuildManifest | None = None,
) -> SemanticTree:
    """Build a tree top-down by repeatedly partitioning oversized nodes."""
    M = max_branching
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    if M < 2:
        raise ValueError("max_branching must be >= 2")
    man = manifest if manifest is not None else BuildManifest()
    man.method = "top_down"
    man.params = {"max_branching": M, "max_tokens": max_tokens, "chars_per_token": chars_per_token}

    docs = list(corpus)
    if summaries is None:
        summaries = generate_multilevel_summaries(docs, summarizer_llm, batch_size, max_workers=max_workers)
        man.llm_calls += math.ceil(len(docs) / batch_size)
    for d in docs:
        man.event("summarize", doc=d.doc_id)

    b = TreeBuilder(M)
    leaf_summary: dict[NodeId, MultiLevelSummary] = {}
    for d in docs:
        s = summaries[d.doc_id]
        v = b.add_leaf(d, list(s.levels))
        leaf_summary[v] = s
    root = b.add_internal("", [v for v in b.nodes])
    queue = deque([root] if len(docs) > M else [])
    calls = 0

    while queue:
        v = queue.popleft()
        leaves = list(b.nodes[v].children)
        level, truncated = select_summary_level([leaf_summary[c] for c in leaves], M, max_tokens, chars_per_token)
        key = {c: leaf_summary[c].level(level) for c in leaves}
        if truncated:
            budget = int(max_tokens * chars_per_token)
            uniq = list(dict.fromkeys(key[c] for c in leaves))
            cut = dict(zip(uniq, prompts.fit_texts_to_budget(uniq, budget)))
            key = {c: cut[key[c]] for c in leaves}
            man.flag(f"node {v}: level-1 keywords exceed token budget; truncated")
        counts = Counter(key[c] for c in leaves)
        unique = list(counts.items())
        groups: list[list[NodeId]] = []
        descs: list[str] = []
        if len(unique) >= 2:
            max_k = min(M, len(unique))
            min_k = min(max(2, M // 2), max_k)
            tc = cluster_llm(unique, min_k, max_k, cluster_client, call_id=calls)
            man.llm_calls += 1
            for f in tc.flags:
                man.flag(f"node {v} (cluster call {calls}): {f}")
            members = tc.members()
            for t, kws in enumerate(members):
                kwset = set(kws)
                g = [c for c in leaves if key[c] in kwset]
                if g:
                    groups.append(g)
                    descs.append(tc.topics[t].description or _describe(kws))
            man.event("cluster", node=v, call_id=calls, level=level, unique=len(unique), topics=len(groups))
            calls += 1
            while len(groups) > M:
                order = sorted(range(len(groups)), key=lambda j: (len(groups[j]), j))
                a, c = sorted(order[:2])
                groups[a] = groups[a] + groups[c]
                descs[a] = descs[a] + " / " + descs[c]
                del groups[c], descs[c]
                man.flag(f"node {v}: more than {M} topics; merged the two smallest")
        if len(groups) < 2:
            groups = _forced_split(leaves, key, M)
            descs = [_describe([leaf_summary[c].level(min(level + 1, NUM_SUMMARY_LEVELS)) for c in g]) for g in groups]
            man.flag(f"node {v}: partition did not shrink; forced {len(groups)}-way split")
        for g, desc in zip(groups, descs):
            child = b.add_internal(desc, g)
            b.attach(v, child)
            man.event("create", parent=v, node=child, leaves=len(g))
            if len(g) > M:
                queue.append(child)
    tree = b.build(root)
    man.layers.append({"height": tree.height(), "internal_nodes": len(tree.internal_nodes())})
    logger.info("top-down build: %d leaves, height %d, %d cluster calls", len(docs), tree.height(), calls)
    return tree
