"""Model backends.

Two families:

* Offline-deterministic defaults that need no downloads: a hashed
  random-projection embedder and a clause-rotation paraphraser. They keep the
  service contract testable on any machine and make responses reproducible.
* Optional transformer backends (sentence-transformers / seq2seq paraphrase)
  selected via configuration when the checkpoints are available locally.

Every embedding backend returns unit-norm vectors; every paraphrase backend
returns a non-empty string and carries a ``model_id`` so results stay
attributable to the exact backend that produced them.
"""

from __future__ import annotations

import hashlib
import re
from functools import lru_cache
from typing import Protocol, Sequence

import numpy as np

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class EmbeddingBackend(Protocol):
    model_id: str
    dim: int

    def embed_sentences(self, texts: Sequence[str]) -> np.ndarray: ...

    def embed_tokens(self, texts: Sequence[str]) -> list[tuple[list[str], np.ndarray]]: ...


class ParaphraseBackend(Protocol):
    model_id: str

    def paraphrase(self, text: str) -> str: ...


def _unit(vector: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 0 else vector


class HashProjectionEmbedder:
    """Deterministic stand-in embedder: per-token gaussian projections.

    Each token maps to a fixed pseudo-random unit vector seeded by its hash;
    a sentence embeds as the normalized mean of its token vectors. Texts with
    no alphanumeric tokens fall back to a vector seeded by the raw text, so
    the unit-norm invariant holds unconditionally.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.model_id = f"hash-projection-{dim}/1"

    def _seeded_vector(self, key: str) -> np.ndarray:
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        return _unit(np.random.default_rng(seed).standard_normal(self.dim))

    @lru_cache(maxsize=65536)
    def _token_vector_cached(self, token: str) -> tuple[float, ...]:
        return tuple(self._seeded_vector("tok:" + token))

    def _token_vector(self, token: str) -> np.ndarray:
        return np.array(self._token_vector_cached(token))

    def embed_sentences(self, texts: Sequence[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim))
        for i, text in enumerate(texts):
            tokens = _tokenize(text)
            if tokens:
                out[i] = _unit(np.mean([self._token_vector(t) for t in tokens], axis=0))
            else:
                out[i] = self._seeded_vector("raw:" + text)
        return out

    def embed_tokens(self, texts: Sequence[str]) -> list[tuple[list[str], np.ndarray]]:
        results = []
        for text in texts:
            tokens = _tokenize(text)
            matrix = (
                np.vstack([self._token_vector(t) for t in tokens])
                if tokens
                else np.empty((0, self.dim))
            )
            results.append((tokens, matrix))
        return results


_LEADING_CONJUNCTIONS = frozenset({"and", "but", "or", "so", "yet", "while", "because"})


def _decapitalize(clause: str) -> str:
    # first-person "I" keeps its capital
    if clause == "I" or clause.startswith(("I ", "I'")):
        return clause
    return clause[:1].lower() + clause[1:] if clause else clause


class ClauseRotationParaphraser:
    """Deterministic sentence rearranger.

    Rotates comma-separated clauses by one, hoisting a leading conjunction
    from the promoted clause onto the demoted one, so the output reads like
    a reordering of the input and always shares its content words. Sentences
    without a second clause come back unchanged.
    """

    model_id = "clause-rotation/1"

    def paraphrase(self, text: str) -> str:
        sentence = text.strip()
        terminal_match = re.search(r"[.!?]+$", sentence)
        terminal = terminal_match.group(0) if terminal_match else ""
        body = sentence[: len(sentence) - len(terminal)] if terminal else sentence
        clauses = [clause.strip() for clause in body.split(", ") if clause.strip()]
        if len(clauses) < 2:
            return sentence
        rotated = clauses[1:] + [clauses[0]]
        head_parts = rotated[0].split(" ", 1)
        if len(head_parts) == 2 and head_parts[0].lower() in _LEADING_CONJUNCTIONS:
            conjunction, remainder = head_parts[0].lower(), head_parts[1]
            rotated[0] = remainder
            rotated[-1] = f"{conjunction} {_decapitalize(rotated[-1])}"
        else:
            rotated[-1] = _decapitalize(rotated[-1])
        rotated[0] = rotated[0][:1].upper() + rotated[0][1:]
        return ", ".join(rotated) + (terminal or ".")


class SentenceTransformerEmbedder:
    """Neural embeddings via sentence-transformers; needs a local checkpoint."""

    def __init__(self, model_name: str = "sentence-transformers/all-MiniLM-L6-v2"):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(model_name)
        self.model_id = model_name
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def embed_sentences(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self._model.encode(list(texts), normalize_embeddings=True, convert_to_numpy=True)
        return np.atleast_2d(vectors)

    def embed_tokens(self, texts: Sequence[str]) -> list[tuple[list[str], np.ndarray]]:
        tokenizer = self._model.tokenizer
        results = []
        for text in texts:
            features = self._model.encode(
                [text], output_value="token_embeddings", convert_to_numpy=False
            )[0]
            matrix = features.cpu().numpy()
            norms = np.linalg.norm(matrix, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            ids = tokenizer(text, truncation=True)["input_ids"]
            tokens = tokenizer.convert_ids_to_tokens(ids)
            results.append((tokens, matrix / norms))
        return results


class Seq2SeqParaphraser:
    """Transformer paraphraser with deterministic beam-search decoding."""

    def __init__(self, model_name: str = "tuner007/pegasus_paraphrase", num_beams: int = 6):
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._tokenizer = AutoTokenizer.from_pretrained(model_name)
        self._model = AutoModelForSeq2SeqLM.from_pretrained(model_name)
        self._num_beams = num_beams
        self.model_id = model_name

    def paraphrase(self, text: str) -> str:
        import torch

        inputs = self._tokenizer([text], truncation=True, padding=True, return_tensors="pt")
        with torch.no_grad():
            output = self._model.generate(
                **inputs, num_beams=self._num_beams, do_sample=False, max_length=120
            )
        return self._tokenizer.decode(output[0], skip_special_tokens=True)


def make_embedding_backend(spec: str, dim: int) -> EmbeddingBackend:
    """Spec syntax: ``hash`` or ``st:<model-name>``."""
    if spec == "hash":
        return HashProjectionEmbedder(dim=dim)
    if spec.startswith("st:"):
        return SentenceTransformerEmbedder(spec[3:])
    raise ValueError(f"unknown embedding backend {spec!r}")


def make_paraphrase_backend(spec: str) -> ParaphraseBackend:
    """Spec syntax: ``rule`` or ``hf:<model-name>``."""
    if spec == "rule":
        return ClauseRotationParaphraser()
    if spec.startswith("hf:"):
        return Seq2SeqParaphraser(spec[3:])
    raise ValueError(f"unknown paraphrase backend {spec!r}")
