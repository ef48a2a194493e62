"""Size-bounded clustering: recursive 2-means bisection with sibling merging."""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np
from sklearn.cluster import KMeans

logger = logging.getLogger(__name__)

Partition = list[list[int]]
ClusteringFn = Callable[[np.ndarray, int, int], Partition]


def check_partition(parts: Sequence[Sequence[int]], n: int, max_size: int | None = None) -> None:
    seen: set[int] = set()
    for p in parts:
        if not p:
            raise ValueError("empty part in partition")
        if max_size is not None and len(p) > max_size:
            raise ValueError(f"part of size {len(p)} exceeds {max_size}")
        for i in p:
            if i in seen:
                raise ValueError(f"index {i} appears in more than one part")
            if not 0 <= i < n:
                raise ValueError(f"index {i} out of range")
            seen.add(i)
    if len(seen) != n:
        raise ValueError(f"partition covers {len(seen)} of {n} items")


def _bisect(X: np.ndarray, idx: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    sub = X[idx]
    labels = None
    if len(np.unique(sub, axis=0)) >= 2:
        km = KMeans(n_clusters=2, n_init=4, random_state=seed).fit(sub)
        labels = km.labels_
    if labels is None or labels.min() == labels.max():
        # identical points or a collapsed split: halve in input order
        half = len(idx) // 2
        return idx[:half], idx[half:]
    return idx[labels == 0], idx[labels == 1]


def _merge_siblings(parts: list[np.ndarray], max_size: int) -> list[np.ndarray]:
    """Repeatedly join the two smallest parts while the union fits."""
    parts = sorted(parts, key=lambda p: (len(p), int(p.min())))
    while len(parts) >= 2 and len(parts[0]) + len(parts[1]) <= max_size:
        merged = np.sort(np.concatenate([parts[0], parts[1]]))
        parts = sorted(parts[2:] + [merged], key=lambda p: (len(p), int(p.min())))
    return parts


def default_clustering(vectors: np.ndarray, max_size: int, seed: int = 0) -> Partition:
    """Partition rows of ``vectors`` into parts of at most ``max_size``.

    Parts above the bound are split in two with k-means and recursed on;
    afterwards siblings are merged back together while they still fit.
    Output parts are sorted lists of row indices, ordered by first index.
    """
    X = np.asarray(vectors, dtype=float)
    n = len(X)
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    if n == 0:
        return []
    rng = np.random.default_rng(seed)

    def rec(idx: np.ndarray) -> list[np.ndarray]:
        if len(idx) <= max_size:
            return [idx]
        a, b = _bisect(X, idx, int(rng.integers(2**31 - 1)))
        return _merge_siblings(rec(a) + rec(b), max_size)

    parts = [sorted(int(i) for i in p) for p in rec(np.arange(n))]
    parts.sort(key=lambda p: p[0])
    return parts


def chunk_partition(n: int, max_size: int) -> Partition:
    """Balanced contiguous runs, sizes differing by at most one."""
    if n == 0:
        return []
    k = -(-n // max_size)
    bounds = np.linspace(0, n, k + 1).round().astype(int)
    return [list(range(bounds[i], bounds[i + 1])) for i in range(k)]
