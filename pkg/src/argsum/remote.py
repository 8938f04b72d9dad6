"""HTTP clients for the inference service (embeddings and paraphrasing).

Wire protocol (JSON over HTTP, documented in docs/nlp_service_protocol.md):

    POST /embed       {"texts": [...], "level": "sentence"|"token"}
    POST /paraphrase  {"text": "..."}
    GET  /health

Responses carry ``schema_version``; this client rejects any major version
other than 1 so silent drift between the two packages cannot go unnoticed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import requests

from .embedding import EmbeddingVector
from .errors import DimensionMismatchError, ProviderUnreachableError, SchemaError

SUPPORTED_MAJOR_VERSION = 1


@dataclass(frozen=True)
class TokenEmbedding:
    """Token-level result for one text: token strings plus a (n_tokens, dim) matrix."""

    tokens: tuple[str, ...]
    matrix: np.ndarray


@dataclass(frozen=True)
class RemoteParaphrase:
    text: str
    model_id: str


def _check_version(payload: dict, endpoint: str) -> None:
    version = str(payload.get("schema_version", ""))
    major = version.split(".", 1)[0]
    if major != str(SUPPORTED_MAJOR_VERSION):
        raise SchemaError(
            f"service at {endpoint} speaks schema {version!r}, client supports major {SUPPORTED_MAJOR_VERSION}"
        )


class ServiceClient:
    """Minimal JSON-over-HTTP client with uniform error mapping."""

    def __init__(self, endpoint: str, timeout: float = 60.0, session: requests.Session | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()

    def post(self, path: str, payload: dict) -> dict:
        url = f"{self.endpoint}{path}"
        try:
            response = self._session.post(url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderUnreachableError(f"cannot reach {url}: {exc}") from exc
        if response.status_code >= 500 or response.status_code == 503:
            raise ProviderUnreachableError(f"{url} returned {response.status_code}")
        if response.status_code >= 400:
            raise SchemaError(f"{url} rejected the request ({response.status_code}): {response.text}")
        body = response.json()
        _check_version(body, self.endpoint)
        return body

    def health(self) -> dict:
        url = f"{self.endpoint}/health"
        try:
            response = self._session.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderUnreachableError(f"cannot reach {url}: {exc}") from exc
        if response.status_code != 200:
            raise ProviderUnreachableError(f"{url} returned {response.status_code}")
        return response.json()


class RemoteEmbedder:
    """Sentence/token embeddings from the inference service; order-preserving."""

    provenance = "remote"

    def __init__(self, endpoint: str, timeout: float = 60.0, session: requests.Session | None = None):
        self._client = ServiceClient(endpoint, timeout=timeout, session=session)

    def embed(
        self, texts: Sequence[str], level: Literal["sentence", "token"] = "sentence"
    ) -> list[EmbeddingVector] | list[TokenEmbedding]:
        if not texts:
            return []
        body = self._client.post("/embed", {"texts": list(texts), "level": level})
        dim = int(body["dim"])
        if level == "sentence":
            vectors = body["vectors"]
            if len(vectors) != len(texts):
                raise SchemaError(f"asked for {len(texts)} vectors, got {len(vectors)}")
            out = []
            for values in vectors:
                if len(values) != dim:
                    raise DimensionMismatchError(
                        f"service declared dim {dim} but returned a vector of dim {len(values)}"
                    )
                out.append(EmbeddingVector.of(values, "remote"))
            return out
        results = []
        for tokens, matrix in zip(body["tokens"], body["vectors"]):
            arr = np.asarray(matrix, dtype=float)
            if arr.ndim != 2 or arr.shape != (len(tokens), dim):
                raise DimensionMismatchError(
                    f"token matrix shape {arr.shape} does not match {len(tokens)} tokens x dim {dim}"
                )
            results.append(TokenEmbedding(tokens=tuple(tokens), matrix=arr))
        if len(results) != len(texts):
            raise SchemaError(f"asked for {len(texts)} token matrices, got {len(results)}")
        return results

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return self.embed(texts, level="sentence")  # type: ignore[return-value]

    def health(self) -> dict:
        return self._client.health()


class RemoteParaphraser:
    """Paraphrase provider backed by the inference service."""

    def __init__(self, endpoint: str, timeout: float = 120.0, session: requests.Session | None = None):
        self._client = ServiceClient(endpoint, timeout=timeout, session=session)

    def paraphrase(self, text: str) -> RemoteParaphrase:
        body = self._client.post("/paraphrase", {"text": text})
        paraphrase = body.get("paraphrase", "")
        if not paraphrase:
            raise SchemaError("service returned an empty paraphrase")
        return RemoteParaphrase(text=paraphrase, model_id=str(body.get("model_id", "")))
