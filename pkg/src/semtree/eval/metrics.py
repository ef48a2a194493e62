"""Ranking metrics with per-query document exclusion."""

from __future__ import annotations

import math
from typing import Collection, Mapping, Sequence


def _gain(g: int) -> float:
    return 2.0**g - 1.0


def dcg(gains: Sequence[int]) -> float:
    return sum(_gain(g) / math.log2(rank + 1) for rank, g in enumerate(gains, start=1))


def ndcg_at_k(
    ranked: Sequence[str],
    qrels: Mapping[str, int],
    k: int = 10,
    excluded: Collection[str] = (),
) -> float:
    """nDCG with exponential gain ``2**g - 1``.

    The ideal ranking is built from judged documents that are not excluded
    for this query. Returns 0.0 when no such relevant document exists.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ideal = sorted((g for d, g in qrels.items() if g > 0 and d not in excluded), reverse=True)[:k]
    idcg = dcg(ideal)
    if idcg == 0.0:
        return 0.0
    return dcg([qrels.get(d, 0) for d in ranked[:k]]) / idcg


def recall_at_k(
    ranked: Sequence[str],
    qrels: Mapping[str, int],
    k: int = 100,
    excluded: Collection[str] = (),
) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    relevant = {d for d, g in qrels.items() if g > 0 and d not in excluded}
    if not relevant:
        return 0.0
    return len(relevant.intersection(ranked[:k])) / len(relevant)


def has_relevant(qrels: Mapping[str, int], excluded: Collection[str] = ()) -> bool:
    return any(g > 0 and d not in excluded for d, g in qrels.items())
