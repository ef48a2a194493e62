"""Text embedding plug-ins.

Anything mapping a string to a fixed-length float vector works. The default
is a feature-hashing bag of words, which is deterministic and needs no model
download.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from sklearn.feature_extraction.text import HashingVectorizer

EmbeddingFn = Callable[[str], np.ndarray]


class HashEmbedder:
    """Signed feature hashing of word unigrams and bigrams, L2-normalised."""

    def __init__(self, dim: int = 512, ngram_range: tuple[int, int] = (1, 2)):
        self.dim = dim
        self._vec = HashingVectorizer(
            n_features=dim, ngram_range=ngram_range, alternate_sign=True, norm="l2", lowercase=True
        )

    def __call__(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        return self._vec.transform(list(texts)).toarray()


def embed_all(embed: EmbeddingFn, texts: Sequence[str]) -> np.ndarray:
    """Stack embeddings, using a batched path when the plug-in offers one."""
    if hasattr(embed, "embed_many"):
        out = np.asarray(embed.embed_many(texts), dtype=float)
    else:
        out = np.vstack([np.asarray(embed(t), dtype=float) for t in texts]) if texts else np.zeros((0, 0))
    if out.ndim != 2 or out.shape[0] != len(texts):
        raise ValueError(f"embedding function returned shape {out.shape} for {len(texts)} texts")
    return out
