from __future__ import annotations

from dataclasses import dataclass, field

Qrels = dict[str, dict[str, int]]


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    extra: dict = field(default_factory=dict, compare=False)


@dataclass
class EvalBundle:
    """Queries, graded judgments (query -> doc -> gain) and per-query exclusions."""

    queries: list[Query]
    qrels: Qrels
    exclusions: dict[str, set[str]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list, compare=False)

    def __post_init__(self):
        ids = {q.query_id for q in self.queries}
        unknown = sorted(set(self.qrels) - ids)
        if unknown:
            raise ValueError(f"qrels reference unknown query ids {unknown[:5]}")
        for qid, docs in self.qrels.items():
            for d, g in docs.items():
                if g < 0:
                    raise ValueError(f"negative gain {g} for ({qid}, {d})")

    def judgments(self, query_id: str) -> dict[str, int]:
        return self.qrels.get(query_id, {})

    def excluded(self, query_id: str) -> set[str]:
        return self.exclusions.get(query_id, set())
