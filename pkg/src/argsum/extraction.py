"""Graph-centrality extractive conclusion generation.

Given a target argument, the generator (1) retrieves related arguments as
context, (2) segments and embeds every sentence of the argument and its
context, (3) builds a sentence-similarity graph (cosine, clamped to [0, 1])
and scores it with damped PageRank, then (4) returns the top-ranked sentence
that originates from the target argument. Context sentences contribute
centrality but are never returned. An optional paraphrase step rewrites the
selected sentence via a provider, with an identity fallback.

Centrality here is unbiased; an argumentativeness prior on sentences is a
deliberate extension hook (see ``pagerank``'s ``graph.weights`` — a caller
can pre-bias the matrix) rather than a built-in.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Literal, Protocol, Sequence

import numpy as np

from .embedding import EmbeddingVector, LexicalSentenceEmbedder
from .errors import EmbeddingFailureError, IndexNotBuiltError, ProviderUnreachableError
from .records import ArgConclusionRecord

logger = logging.getLogger(__name__)

Origin = Literal["target_argument", "context"]

# Words that end in a period without ending a sentence.
_ABBREVIATIONS = frozenset(
    "e.g i.e etc cf vs al mr mrs ms dr prof sr jr st no fig approx inc ltd u.s u.k a.m p.m".split()
)
_BOUNDARY_RE = re.compile(r"[.!?]+[\"'”’)\]]*(?=(\s+)(\S))")
_OPENERS = "\"'“‘([¿¡"


def _is_boundary(text: str, punct_end: int, next_char: str) -> bool:
    if not (next_char.isupper() or next_char.isdigit() or next_char in _OPENERS):
        return False
    before = text[:punct_end].rstrip(".!?\"'”’)]")
    match = re.search(r"(\S+)$", before)
    if match and match.group(1).lower().strip("(\"'“‘") in _ABBREVIATIONS:
        return False
    return True


def _split_with_punctuation(line: str) -> list[str]:
    segments = []
    start = 0
    for match in _BOUNDARY_RE.finditer(line):
        next_char = match.group(2)
        if _is_boundary(line, match.end(), next_char):
            segments.append(line[start : match.end()])
            start = match.end() + len(match.group(1))
    segments.append(line[start:])
    return segments


def segment_sentences(text: str) -> list[str]:
    """Rule-based sentence segmentation.

    Splits on terminal punctuation followed by whitespace and an
    uppercase/digit/opening-quote character, with an abbreviation exception
    list; decimals never split because the period is not followed by
    whitespace. Newlines are always boundaries. The concatenation of the
    segments equals the input modulo inter-sentence whitespace.
    """
    if not text.strip():
        raise ValueError("cannot segment empty text")
    segments = []
    for line in text.splitlines():
        for segment in _split_with_punctuation(line):
            segment = segment.strip()
            if segment:
                segments.append(segment)
    return segments


class ContextIndex:
    """BM25 index over corpus texts for related-argument retrieval.

    Terms are whitespace-split and lowercased. The scored query is the
    target argument's own text; the argument itself is excluded from
    results by id.
    """

    def __init__(self, k1: float = 1.5, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self._records: list[ArgConclusionRecord] | None = None

    @staticmethod
    def _terms(text: str) -> list[str]:
        return text.lower().split()

    def build(self, records: Sequence[ArgConclusionRecord]) -> "ContextIndex":
        self._records = list(records)
        self._term_freqs = [Counter(self._terms(r.text)) for r in self._records]
        self._doc_lens = [sum(tf.values()) for tf in self._term_freqs]
        self._avg_len = (sum(self._doc_lens) / len(self._doc_lens)) if self._doc_lens else 0.0
        df: Counter = Counter()
        for tf in self._term_freqs:
            df.update(tf.keys())
        n = len(self._records)
        self._idf = {
            term: math.log(1.0 + (n - count + 0.5) / (count + 0.5))
            for term, count in df.items()
        }
        return self

    def score(self, query_terms: Sequence[str], doc_index: int) -> float:
        tf = self._term_freqs[doc_index]
        if not tf:
            return 0.0
        norm = self.k1 * (1 - self.b + self.b * self._doc_lens[doc_index] / self._avg_len)
        total = 0.0
        for term in query_terms:
            count = tf.get(term)
            if not count:
                continue
            total += self._idf[term] * count * (self.k1 + 1) / (count + norm)
        return total

    def query(self, argument: ArgConclusionRecord, k: int) -> list[ArgConclusionRecord]:
        if self._records is None:
            raise IndexNotBuiltError("build the index before querying")
        if k <= 0:
            return []
        query_terms = self._terms(argument.text)
        scored = [
            (-self.score(query_terms, i), i)
            for i, record in enumerate(self._records)
            if record.id != argument.id
        ]
        scored.sort()
        return [self._records[i] for _, i in scored[:k]]


def retrieve_context(
    argument: ArgConclusionRecord, corpus_index: ContextIndex, k: int
) -> list[ArgConclusionRecord]:
    """Top-k related arguments by lexical relevance, self excluded."""
    return corpus_index.query(argument, k)


@dataclass(frozen=True)
class Sentence:
    text: str
    origin: Origin
    index: int


@dataclass
class SentenceGraph:
    """Weighted sentence-similarity graph plus centrality parameters."""

    sentences: list[Sentence]
    weights: np.ndarray
    damping: float = 0.85
    tolerance: float = 1e-8
    max_iterations: int = 200

    def __post_init__(self):
        n = len(self.sentences)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (n, n):
            raise ValueError(f"weights must be {n}x{n}, got {self.weights.shape}")
        if not np.allclose(self.weights, self.weights.T, atol=1e-9):
            raise ValueError("weights must be symmetric")
        if np.any(np.abs(np.diagonal(self.weights)) > 1e-12):
            raise ValueError("diagonal must be zero")
        if np.any(self.weights < 0) or np.any(self.weights > 1 + 1e-9):
            raise ValueError("weights must lie in [0, 1]")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if not any(s.origin == "target_argument" for s in self.sentences):
            raise ValueError("graph needs at least one target-argument sentence")


@dataclass(frozen=True)
class PageRankResult:
    scores: np.ndarray
    iterations: int
    converged: bool


def pagerank(graph: SentenceGraph) -> PageRankResult:
    """Power iteration s <- (1-d)/n + d * W~ s on column-normalized weights.

    Columns with zero out-weight are treated as uniform (dangling handling),
    which keeps the iterate an exact probability vector. Stops when the L1
    change drops below ``graph.tolerance``; if ``max_iterations`` is reached
    first the last iterate is returned with ``converged=False``.
    """
    n = len(graph.sentences)
    column_sums = graph.weights.sum(axis=0)
    transition = np.empty((n, n))
    for j in range(n):
        if column_sums[j] > 0:
            transition[:, j] = graph.weights[:, j] / column_sums[j]
        else:
            transition[:, j] = 1.0 / n
    scores = np.full(n, 1.0 / n)
    teleport = (1.0 - graph.damping) / n
    for iteration in range(1, graph.max_iterations + 1):
        updated = teleport + graph.damping * (transition @ scores)
        change = float(np.abs(updated - scores).sum())
        scores = updated
        if change < graph.tolerance:
            return PageRankResult(scores=scores, iterations=iteration, converged=True)
    logger.warning("pagerank hit max_iterations=%d without converging", graph.max_iterations)
    return PageRankResult(scores=scores, iterations=graph.max_iterations, converged=False)


@dataclass(frozen=True)
class ExtractionParams:
    damping: float = 0.85
    tolerance: float = 1e-8
    max_iterations: int = 200


@dataclass(frozen=True)
class ExtractionResult:
    conclusion_sentence: str
    score: float
    ranked: list[tuple[int, float]]
    paraphrased: str | None = None
    paraphrase_fallback: bool = False
    converged: bool = True


class SentenceEmbedder(Protocol):
    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]: ...


class ParaphraseProvider(Protocol):
    def paraphrase(self, text: str): ...


@dataclass(frozen=True)
class ParaphraseResult:
    text: str
    used_fallback: bool
    model_id: str | None = None


def paraphrase(
    sentence: str,
    client: ParaphraseProvider | None,
    allow_fallback: bool = True,
) -> ParaphraseResult:
    """Rewrite a sentence via the provider; identity fallback when absent.

    With no client configured the input comes back unchanged and flagged.
    A dead provider falls back the same way when ``allow_fallback`` is on,
    otherwise the error propagates.
    """
    if not sentence.strip():
        raise ValueError("cannot paraphrase an empty sentence")
    if client is None:
        return ParaphraseResult(text=sentence, used_fallback=True)
    try:
        response = client.paraphrase(sentence)
    except ProviderUnreachableError:
        if not allow_fallback:
            raise
        logger.warning("paraphrase provider unreachable; returning input unchanged")
        return ParaphraseResult(text=sentence, used_fallback=True)
    if isinstance(response, str):
        return ParaphraseResult(text=response, used_fallback=False)
    return ParaphraseResult(
        text=response.text, used_fallback=False, model_id=getattr(response, "model_id", None)
    )


def build_sentence_graph(
    argument: ArgConclusionRecord,
    context: Sequence[ArgConclusionRecord],
    embedder: SentenceEmbedder,
    params: ExtractionParams,
) -> SentenceGraph:
    sentences = [
        Sentence(text=t, origin="target_argument", index=i)
        for i, t in enumerate(segment_sentences(argument.text))
    ]
    offset = len(sentences)
    for doc in context:
        for t in segment_sentences(doc.text):
            sentences.append(Sentence(text=t, origin="context", index=offset))
            offset += 1
    try:
        vectors = embedder.embed_batch([s.text for s in sentences])
    except Exception as exc:
        if isinstance(exc, ProviderUnreachableError):
            raise
        raise EmbeddingFailureError(f"embedding provider failed: {exc}") from exc
    matrix = np.vstack([v.values for v in vectors])
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    unit = matrix / norms
    weights = np.clip(unit @ unit.T, 0.0, 1.0)
    weights = (weights + weights.T) / 2.0
    np.fill_diagonal(weights, 0.0)
    return SentenceGraph(
        sentences=sentences,
        weights=weights,
        damping=params.damping,
        tolerance=params.tolerance,
        max_iterations=params.max_iterations,
    )


def rank_sentences(scores: np.ndarray) -> list[tuple[int, float]]:
    """Indices sorted by descending score; ties go to the earlier sentence."""
    return sorted(
        ((i, float(s)) for i, s in enumerate(scores)),
        key=lambda pair: (-pair[1], pair[0]),
    )


def extract_conclusion(
    argument: ArgConclusionRecord,
    context: Sequence[ArgConclusionRecord],
    embedder: SentenceEmbedder | None = None,
    params: ExtractionParams | None = None,
    paraphraser: ParaphraseProvider | None = None,
    apply_paraphrase: bool = False,
) -> ExtractionResult:
    """Select the most central target-argument sentence as the conclusion."""
    embedder = embedder or LexicalSentenceEmbedder()
    params = params or ExtractionParams()
    graph = build_sentence_graph(argument, context, embedder, params)
    result = pagerank(graph)
    ranked = rank_sentences(result.scores)
    best_index, best_score = next(
        (i, s) for i, s in ranked if graph.sentences[i].origin == "target_argument"
    )
    chosen = graph.sentences[best_index].text
    paraphrased = None
    used_fallback = False
    if apply_paraphrase:
        outcome = paraphrase(chosen, paraphraser)
        paraphrased = outcome.text
        used_fallback = outcome.used_fallback
    return ExtractionResult(
        conclusion_sentence=chosen,
        score=best_score,
        ranked=ranked,
        paraphrased=paraphrased,
        paraphrase_fallback=used_fallback,
        converged=result.converged,
    )
