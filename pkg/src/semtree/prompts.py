"""Prompt templates and the JSON response contracts that go with them.

Templates are plain ``str.format`` text assets shipped in ``prompts/``; any
of them can be replaced by passing a path to :func:`load_template`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Sequence

SCORING = "scoring.txt"
MULTILEVEL_KEYWORDS = "multilevel_keywords.txt"
CLUSTER_TOPICS = "cluster_topics.txt"
SUMMARIZE_CHILDREN = "summarize_children.txt"

DEFAULT_RELEVANCE_DEFINITION = (
    "A candidate is relevant if it contains, or leads to, information that helps "
    "answer or reason through the user's query."
)
TRUNCATION_MARKER = " [...]"


def load_template(name: str, override: str | Path | None = None) -> str:
    if override is not None:
        return Path(override).read_text(encoding="utf-8")
    return resources.files(__package__).joinpath("prompts", name).read_text(encoding="utf-8")


def truncate(text: str, budget: int | None, marker: str = TRUNCATION_MARKER) -> str:
    if budget is None or len(text) <= budget:
        return text
    return text[: max(0, budget - len(marker))] + marker


def fit_texts_to_budget(texts: Sequence[str], budget: int | None, marker: str = TRUNCATION_MARKER) -> list[str]:
    """Shrink the longest texts first until the total length fits ``budget``.

    Finds the largest per-text cap ``c`` with ``sum(min(len, c)) <= budget``;
    texts longer than the cap are truncated to it (marker included).
    """
    lengths = [len(t) for t in texts]
    if budget is None or sum(lengths) <= budget:
        return list(texts)
    lo, hi = 0, max(lengths)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if sum(min(n, mid) for n in lengths) <= budget:
            lo = mid
        else:
            hi = mid - 1
    return [truncate(t, lo, marker) for t in texts]


def render_options(texts: Sequence[str]) -> str:
    return "\n\n".join(f"[{k}] {t}" for k, t in enumerate(texts))


def render_scoring_prompt(
    query: str,
    candidate_texts: Sequence[str],
    relevance_definition: str = "",
    max_chars_per_candidate: int | None = 2000,
    template: str | None = None,
) -> str:
    template = template if template is not None else load_template(SCORING)
    texts = [truncate(t, max_chars_per_candidate) for t in candidate_texts]
    return template.format(
        relevance_defintion=relevance_definition or DEFAULT_RELEVANCE_DEFINITION,
        query=query,
        child_node_options=render_options(texts),
    )


def render_keywords_prompt(
    passages: Sequence[tuple[int, str]],
    max_chars_per_passage: int | None = 4000,
    template: str | None = None,
) -> str:
    template = template if template is not None else load_template(MULTILEVEL_KEYWORDS)
    lines = [
        json.dumps({"id": pid, "passage": truncate(text, max_chars_per_passage)}, ensure_ascii=False)
        for pid, text in passages
    ]
    return template.format(desc_list="\n".join(lines))


def render_cluster_prompt(
    keywords_with_counts: Sequence[tuple[str, int]],
    min_k: int,
    max_k: int,
    template: str | None = None,
) -> str:
    template = template if template is not None else load_template(CLUSTER_TOPICS)
    lines = [json.dumps({"keyword": k, "count": n}, ensure_ascii=False) for k, n in keywords_with_counts]
    return template.format(keywords_list_with_count="\n".join(lines), min_k=min_k, max_k=max_k)


def render_summarize_prompt(child_texts: Sequence[str], prompt_id: int, template: str | None = None) -> str:
    template = template if template is not None else load_template(SUMMARIZE_CHILDREN)
    return template.format(prompt_id=prompt_id, positive_set_descriptions=render_options(child_texts))


# -- response parsing -------------------------------------------------------


class ParseErrorKind(str, Enum):
    NOT_JSON = "not_json"
    MISSING_KEY = "missing_key"
    BAD_TYPE = "bad_type"
    INDEX_OUT_OF_RANGE = "index_out_of_range"
    DUPLICATE_INDEX = "duplicate_index"
    MISSING_INDEX = "missing_index"
    WRONG_LENGTH = "wrong_length"


class ResponseParseError(ValueError):
    def __init__(self, kind: ParseErrorKind, message: str, raw: str = ""):
        super().__init__(f"{kind.value}: {message}")
        self.kind = kind
        self.raw = raw


_FENCE = re.compile(r"^\s*```[A-Za-z0-9_-]*\s*\n?(.*?)\n?\s*```\s*$", re.S)
_TRAILING_COMMA = re.compile(r",\s*([}\]])")


def extract_json_object(raw: str) -> dict:
    """Parse a single JSON object, tolerating code fences and stray prose."""
    text = raw.strip()
    m = _FENCE.match(text)
    if m:
        text = m.group(1).strip()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        start, end = text.find("{"), text.rfind("}")
        if start < 0 or end <= start:
            raise ResponseParseError(ParseErrorKind.NOT_JSON, "no JSON object found", raw) from None
        body = text[start : end + 1]
        try:
            obj = json.loads(body)
        except json.JSONDecodeError:
            try:
                obj = json.loads(_TRAILING_COMMA.sub(r"\1", body))
            except json.JSONDecodeError as e:
                raise ResponseParseError(ParseErrorKind.NOT_JSON, str(e), raw) from None
    if not isinstance(obj, dict):
        raise ResponseParseError(ParseErrorKind.BAD_TYPE, "top level is not an object", raw)
    return obj


def _as_index(x) -> int | None:
    if isinstance(x, bool):
        return None
    if isinstance(x, int):
        return x
    if isinstance(x, float) and x.is_integer():
        return int(x)
    if isinstance(x, str) and x.strip().lstrip("-").isdigit():
        return int(x.strip())
    return None


@dataclass
class ParsedScores:
    scores: list[float]
    reasoning: str | None
    ranking: list[int] | None
    flags: list[str] = field(default_factory=list)


def parse_scoring_response(raw: str, n_candidates: int) -> ParsedScores:
    """Map ``relevance_scores`` pairs ``[index, 0..100]`` onto [0, 1] scores."""
    obj = extract_json_object(raw)
    if "relevance_scores" not in obj:
        raise ResponseParseError(ParseErrorKind.MISSING_KEY, "relevance_scores", raw)
    pairs = obj["relevance_scores"]
    if not isinstance(pairs, list):
        raise ResponseParseError(ParseErrorKind.BAD_TYPE, "relevance_scores is not an array", raw)
    flags: list[str] = []
    scores: dict[int, float] = {}
    for pair in pairs:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ResponseParseError(ParseErrorKind.BAD_TYPE, f"entry {pair!r} is not a pair", raw)
        idx = _as_index(pair[0])
        val = pair[1]
        if idx is None or isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ResponseParseError(ParseErrorKind.BAD_TYPE, f"entry {pair!r} is not [int, number]", raw)
        if not 0 <= idx < n_candidates:
            raise ResponseParseError(ParseErrorKind.INDEX_OUT_OF_RANGE, f"index {idx}", raw)
        if idx in scores:
            raise ResponseParseError(ParseErrorKind.DUPLICATE_INDEX, f"index {idx}", raw)
        if not 0 <= val <= 100:
            flags.append(f"clamped score {val} for index {idx}")
            val = min(100.0, max(0.0, float(val)))
        scores[idx] = float(val) / 100.0
    missing = [k for k in range(n_candidates) if k not in scores]
    if missing:
        raise ResponseParseError(ParseErrorKind.MISSING_INDEX, f"indices {missing}", raw)

    reasoning = obj.get("reasoning")
    if reasoning is not None and not isinstance(reasoning, str):
        reasoning = json.dumps(reasoning)
    ranking = obj.get("ranking")
    if ranking is not None:
        parsed = [_as_index(r) for r in ranking] if isinstance(ranking, list) else None
        if parsed is None or None in parsed:
            flags.append("ignored malformed ranking")
            ranking = None
        else:
            ranking = parsed
    return ParsedScores([scores[k] for k in range(n_candidates)], reasoning, ranking, flags)


def parse_keywords_response(raw: str, passage_ids: Sequence[int], n_levels: int = 5) -> dict[int, list[str]]:
    obj = extract_json_object(raw)
    items = obj.get("passages_keywords")
    if items is None:
        raise ResponseParseError(ParseErrorKind.MISSING_KEY, "passages_keywords", raw)
    if not isinstance(items, list):
        raise ResponseParseError(ParseErrorKind.BAD_TYPE, "passages_keywords is not an array", raw)
    wanted = set(passage_ids)
    out: dict[int, list[str]] = {}
    for item in items:
        if not isinstance(item, dict) or "passage_id" not in item or "hierarchical_keywords" not in item:
            raise ResponseParseError(ParseErrorKind.MISSING_KEY, f"malformed item {item!r}", raw)
        pid = _as_index(item["passage_id"])
        levels = item["hierarchical_keywords"]
        if pid is None or pid not in wanted:
            raise ResponseParseError(ParseErrorKind.INDEX_OUT_OF_RANGE, f"passage_id {item['passage_id']!r}", raw)
        if pid in out:
            raise ResponseParseError(ParseErrorKind.DUPLICATE_INDEX, f"passage_id {pid}", raw)
        if not isinstance(levels, list) or not all(isinstance(x, str) for x in levels):
            raise ResponseParseError(ParseErrorKind.BAD_TYPE, f"keywords for {pid}", raw)
        if len(levels) != n_levels:
            raise ResponseParseError(
                ParseErrorKind.WRONG_LENGTH, f"passage {pid} has {len(levels)} levels, expected {n_levels}", raw
            )
        out[pid] = [x.strip() for x in levels]
    missing = sorted(wanted - out.keys())
    if missing:
        raise ResponseParseError(ParseErrorKind.MISSING_INDEX, f"passage ids {missing}", raw)
    return out


@dataclass
class RawCluster:
    name: str
    description: str
    keywords: list[str]


def parse_cluster_response(raw: str) -> list[RawCluster]:
    obj = extract_json_object(raw)
    clusters = obj.get("clusters")
    if clusters is None:
        raise ResponseParseError(ParseErrorKind.MISSING_KEY, "clusters", raw)
    if not isinstance(clusters, list) or not clusters:
        raise ResponseParseError(ParseErrorKind.BAD_TYPE, "clusters is not a non-empty array", raw)
    out = []
    for c in clusters:
        if not isinstance(c, dict) or "keywords" not in c:
            raise ResponseParseError(ParseErrorKind.MISSING_KEY, f"cluster {c!r} lacks keywords", raw)
        kws = c["keywords"]
        if not isinstance(kws, list) or not all(isinstance(k, str) for k in kws):
            raise ResponseParseError(ParseErrorKind.BAD_TYPE, "cluster keywords must be strings", raw)
        name = str(c.get("name") or c.get("cluster_name") or "")
        desc = str(c.get("description") or c.get("cluster_description") or name)
        out.append(RawCluster(name, desc, kws))
    return out


def parse_summary_response(raw: str) -> str:
    obj = extract_json_object(raw)
    summary = obj.get("summary")
    if summary is None:
        raise ResponseParseError(ParseErrorKind.MISSING_KEY, "summary", raw)
    if not isinstance(summary, str) or not summary.strip():
        raise ResponseParseError(ParseErrorKind.BAD_TYPE, "summary must be a non-empty string", raw)
    return summary.strip()
