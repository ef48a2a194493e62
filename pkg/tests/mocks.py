"""Prompt-parsing stand-ins for the model used across construction tests."""

from __future__ import annotations

import json
import re

from semtree.llm import Completion
from semtree.offline import _between


def planted_levels(topic: int, j: int) -> list[str]:
    """Five nested keyword strings; each level extends the previous one."""
    out = [f"topic {topic}"]
    for name, mod in (("facet", 4), ("part", 12), ("item", 24), ("doc", None)):
        out.append(out[-1] + f" {name} {j if mod is None else j % mod}")
    return out


class PlantedKeywordWriter:
    """Answers the keyword prompt from a content -> levels lookup."""

    def __init__(self, levels_by_content: dict[str, list[str]]):
        self.levels_by_content = levels_by_content
        self.calls = 0

    def __call__(self, prompt: str) -> Completion:
        self.calls += 1
        block = prompt.rsplit("## List of Input Passages:\n\n", 1)[1]
        items = []
        for line in block.strip().splitlines():
            rec = json.loads(line)
            items.append({"passage_id": rec["id"], "hierarchical_keywords": self.levels_by_content[rec["passage"]]})
        return Completion(json.dumps({"passages_keywords": items}))


def prompt_keywords(prompt: str) -> list[tuple[str, int]]:
    block = _between(prompt, "importance counts:\n\n", "\n\n## Desired Output Format")
    recs = [json.loads(line) for line in block.strip().splitlines()]
    return [(r["keyword"], r["count"]) for r in recs]


def prompt_k_range(prompt: str) -> tuple[int, int]:
    lo, hi = re.search(r"k is between \[(\d+), (\d+)\]", prompt).groups()
    return int(lo), int(hi)


class PrefixClusterer:
    """Groups keywords by dropping their last ``name value`` pair."""

    def __init__(self):
        self.prompts: list[str] = []

    def __call__(self, prompt: str) -> Completion:
        self.prompts.append(prompt)
        groups: dict[str, list[str]] = {}
        for kw, _ in prompt_keywords(prompt):
            groups.setdefault(kw.rsplit(" ", 2)[0], []).append(kw)
        clusters = [{"name": k, "description": f"about {k}", "keywords": v} for k, v in groups.items()]
        return Completion(json.dumps({"clusters": clusters}))


def concat_summarizer(child_texts):
    """Summary = sorted union of the children's whitespace tokens."""
    return " ".join(sorted({t for c in child_texts for t in c.split()}))
