"""Deterministic local stand-ins for the remote model.

Each class is a transport: it receives a fully rendered prompt, recovers the
inputs from it, and answers in the JSON shape the prompt asks for. Plugged
into :class:`~semtree.llm.LlmClient` they exercise the same render, parse and
retry path as a real endpoint, which keeps the CLI usable without network
access.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from typing import Sequence

import numpy as np
from sklearn.cluster import KMeans

from .construction.embeddings import HashEmbedder
from .llm import Completion

STOPWORDS = frozenset(
    "a an and are as at be by for from has have in is it its of on or that the this to was were will with "
    "which what when where who how not no but if then than so such these those their there they we you".split()
)

_WORD = re.compile(r"[a-z0-9]+")
_OPTION = re.compile(r"^\[(\d+)\] ", re.M)


def words(text: str) -> list[str]:
    return [w for w in _WORD.findall(text.lower()) if w not in STOPWORDS and len(w) > 1]


def top_terms(texts: Sequence[str], n: int) -> list[str]:
    """Most frequent terms, ties broken by first appearance."""
    counts: Counter = Counter()
    first: dict[str, int] = {}
    for t in texts:
        for w in words(t):
            counts[w] += 1
            first.setdefault(w, len(first))
    return sorted(counts, key=lambda w: (-counts[w], first[w]))[:n]


def _between(prompt: str, start: str, end: str) -> str:
    i = prompt.index(start) + len(start)
    j = prompt.index(end, i)
    return prompt[i:j]


def _options(block: str) -> list[str]:
    parts = _OPTION.split(block.strip())
    # parts = ["", "0", text0, "1", text1, ...]
    return [parts[i + 1].strip() for i in range(1, len(parts) - 1, 2)]


def _reply(obj: dict, prompt: str) -> Completion:
    text = json.dumps(obj, ensure_ascii=False)
    return Completion(text, max(1, len(prompt) // 4), max(1, len(text) // 4))


class OfflineScorer:
    """Answers the scoring prompt with lexical cosine similarity to the query."""

    def __init__(self, dim: int = 2048):
        self.embed = HashEmbedder(dim, ngram_range=(1, 1))

    def __call__(self, prompt: str) -> Completion:
        query = _between(prompt, "## USER QUERY\n\n", "\n\n---\n\n## CANDIDATES").strip()
        block = prompt.split("(e.g., [0]).\n\n", 1)[1].rsplit("\n\n---\n\n## YOUR EVALUATION TASK", 1)[0]
        cands = _options(block)
        q = self.embed(" ".join(words(query)))
        X = self.embed.embed_many([" ".join(words(c)) for c in cands])
        sims = np.clip(np.abs(X @ q), 0.0, 1.0)
        scores = [int(round(100 * np.sqrt(s))) for s in sims]
        ranking = sorted(range(len(cands)), key=lambda k: (-scores[k], k))
        return _reply(
            {
                "reasoning": "lexical overlap with the query",
                "ranking": ranking,
                "relevance_scores": [[k, s] for k, s in enumerate(scores)],
            },
            prompt,
        )


class OfflineKeywordWriter:
    """Answers the multi-level keyword prompt with frequent passage terms."""

    SIZES = (1, 3, 5, 8, 14)

    def __call__(self, prompt: str) -> Completion:
        block = prompt.rsplit("## List of Input Passages:\n\n", 1)[1]
        items = []
        for line in block.strip().splitlines():
            rec = json.loads(line)
            terms = top_terms([rec["passage"]], max(self.SIZES)) or ["passage"]
            levels = [" ".join(terms[:n]) for n in self.SIZES]
            items.append({"passage_id": rec["id"], "hierarchical_keywords": levels})
        return _reply({"passages_keywords": items}, prompt)


class OfflineTopicClusterer:
    """Answers the keyword-clustering prompt with weighted k-means on hashed keywords."""

    def __init__(self, seed: int = 0, dim: int = 1024):
        self.seed = seed
        self.embed = HashEmbedder(dim, ngram_range=(1, 1))

    def __call__(self, prompt: str) -> Completion:
        lo, hi = map(int, re.search(r"k is between \[(\d+), (\d+)\]", prompt).groups())
        block = _between(prompt, "importance counts:\n\n", "\n\n## Desired Output Format")
        recs = [json.loads(line) for line in block.strip().splitlines()]
        kws = [r["keyword"] for r in recs]
        counts = np.array([max(1, int(r["count"])) for r in recs], dtype=float)
        k = max(1, min(hi, len(kws)))
        if len(kws) <= k:
            labels = np.arange(len(kws))
        else:
            X = self.embed.embed_many(kws)
            km = KMeans(n_clusters=k, n_init=4, random_state=self.seed).fit(X, sample_weight=counts)
            labels = km.labels_
        clusters = []
        for c in sorted(set(labels.tolist())):
            members = [kws[i] for i in range(len(kws)) if labels[i] == c]
            terms = top_terms(members, 6) or members[:1]
            clusters.append(
                {"name": " ".join(terms[:2]), "description": ", ".join(terms), "keywords": members}
            )
        return _reply({"clusters": clusters}, prompt)


class OfflineSummaryWriter:
    """Answers the children-summary prompt with the children's shared terms."""

    def __init__(self, n_terms: int = 12):
        self.n_terms = n_terms

    def __call__(self, prompt: str) -> Completion:
        block = _between(prompt, "parent node to be summarized\n\n", "\n---\n\n## YOUR TASK")
        kids = _options(block)
        terms = top_terms(kids, self.n_terms) or ["empty"]
        fingerprints = [{"one_line_summary": " ".join(top_terms([k], 8)), "name": f"child {i}"} for i, k in enumerate(kids)]
        return _reply(
            {
                "detailed_fingerprints": fingerprints,
                "common_theme": " ".join(terms[:4]),
                "summary": " ".join(terms),
            },
            prompt,
        )
