"""Sentence vectors: a built-in lexical embedder plus the remote client hook.

The lexical embedder is a deterministic tf-idf stand-in for neural sentence
embeddings: tf is the raw count, idf = ln((1+N)/(1+df)) + 1 (smoothed so
unseen terms never divide by zero), vectors are L2-normalized. It exists so
the whole pipeline runs and is testable offline; the remote client (see
``argsum.remote``) is the fidelity path.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import DimensionMismatchError, VocabularyNotFittedError, ZeroVectorError
from .text import tokenize

Provenance = Literal["lexical", "remote"]


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    dim: int
    provenance: Provenance

    def __post_init__(self):
        if self.values.shape != (self.dim,):
            raise DimensionMismatchError(
                f"vector has shape {self.values.shape}, declared dim {self.dim}"
            )

    @classmethod
    def of(cls, values: Sequence[float] | np.ndarray, provenance: Provenance) -> "EmbeddingVector":
        arr = np.asarray(values, dtype=float)
        return cls(values=arr, dim=arr.shape[0], provenance=provenance)


@dataclass(frozen=True)
class LexicalVocabulary:
    """Token inventory and idf weights fitted on one working document set."""

    index: dict[str, int]
    idf: np.ndarray
    n_docs: int

    @classmethod
    def fit(cls, documents: Iterable[str]) -> "LexicalVocabulary":
        doc_tokens = [set(tokenize(doc)) for doc in documents]
        n_docs = len(doc_tokens)
        df: Counter = Counter()
        for tokens in doc_tokens:
            df.update(tokens)
        terms = sorted(df)
        idf = np.array(
            [math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in terms], dtype=float
        )
        return cls(index={t: i for i, t in enumerate(terms)}, idf=idf, n_docs=n_docs)

    @property
    def dim(self) -> int:
        return len(self.index)


def embed_lexical(
    texts: Sequence[str], vocabulary: LexicalVocabulary | None
) -> list[EmbeddingVector]:
    """tf-idf embed ``texts`` with a fitted vocabulary; deterministic.

    Tokens outside the vocabulary are ignored, so a text sharing no fitted
    token yields the zero vector (callers treat it as similarity zero).
    """
    if vocabulary is None:
        raise VocabularyNotFittedError("fit a LexicalVocabulary before embedding")
    dim = vocabulary.dim
    out = []
    for text in texts:
        vec = np.zeros(dim)
        for token, count in Counter(tokenize(text)).items():
            i = vocabulary.index.get(token)
            if i is not None:
                vec[i] = count * vocabulary.idf[i]
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        out.append(EmbeddingVector(values=vec, dim=dim, provenance="lexical"))
    return out


class LexicalSentenceEmbedder:
    """Batch adapter: fits a fresh vocabulary on each working set it embeds."""

    provenance: Provenance = "lexical"

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return embed_lexical(texts, LexicalVocabulary.fit(texts))


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Standard cosine similarity; symmetric, in [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dims differ: {a.dim} vs {b.dim}")
    norm_a = float(np.linalg.norm(a.values))
    norm_b = float(np.linalg.norm(b.values))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVectorError("cosine undefined for an all-zero vector")
    value = float(np.dot(a.values, b.values) / (norm_a * norm_b))
    return max(-1.0, min(1.0, value))


def embed_remote(
    texts: Sequence[str],
    level: Literal["sentence", "token"] = "sentence",
    endpoint: str = "http://localhost:8900",
):
    """Embed via the inference service; see ``argsum.remote.RemoteEmbedder``."""
    from .remote import RemoteEmbedder

    return RemoteEmbedder(endpoint).embed(texts, level=level)
