"""HTTP application: /embed, /paraphrase, /health.

Wire schema v1 (shared with the toolkit client; see docs/nlp_service_protocol.md
at the repository root). Every response carries ``schema_version`` so clients
can reject incompatible major versions. Until both models are loaded the
service answers 503; malformed requests get 400.
"""

from __future__ import annotations

import logging
import os
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .backends import (
    EmbeddingBackend,
    ParaphraseBackend,
    make_embedding_backend,
    make_paraphrase_backend,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
ENV_PREFIX = "ARGSUM_SERVICE_"


@dataclass(frozen=True)
class Settings:
    embedding_backend: str = "hash"
    paraphrase_backend: str = "rule"
    dim: int = 256
    host: str = "127.0.0.1"
    port: int = 8900

    @classmethod
    def from_env(cls) -> "Settings":
        env = os.environ.get
        return cls(
            embedding_backend=env(ENV_PREFIX + "EMBEDDING_BACKEND", cls.embedding_backend),
            paraphrase_backend=env(ENV_PREFIX + "PARAPHRASE_BACKEND", cls.paraphrase_backend),
            dim=int(env(ENV_PREFIX + "DIM", str(cls.dim))),
            host=env(ENV_PREFIX + "HOST", cls.host),
            port=int(env(ENV_PREFIX + "PORT", str(cls.port))),
        )


class ModelRegistry:
    """Holds the backends and the load state the health endpoint reports."""

    def __init__(self, settings: Settings):
        self._settings = settings
        self._lock = threading.Lock()
        self.embedding: EmbeddingBackend | None = None
        self.paraphrase: ParaphraseBackend | None = None
        self.load_error: str | None = None

    @property
    def loaded(self) -> bool:
        return self.embedding is not None and self.paraphrase is not None

    def load(self) -> None:
        with self._lock:
            if self.loaded:
                return
            try:
                self.embedding = make_embedding_backend(
                    self._settings.embedding_backend, self._settings.dim
                )
                self.paraphrase = make_paraphrase_backend(self._settings.paraphrase_backend)
                self.load_error = None
                logger.info(
                    "models loaded: embedding=%s paraphrase=%s",
                    self.embedding.model_id,
                    self.paraphrase.model_id,
                )
            except Exception as exc:
                self.load_error = str(exc)
                logger.exception("model load failed")
                raise


class EmbedRequest(BaseModel):
    texts: list[str]
    level: Literal["sentence", "token"] = "sentence"


class ParaphraseRequest(BaseModel):
    text: str


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"detail": detail, "schema_version": SCHEMA_VERSION}
    )


def create_app(settings: Settings | None = None, auto_load: bool = True) -> FastAPI:
    """Build the application; ``auto_load=False`` defers model loading so the
    503 -> 200 health transition is observable (and testable)."""
    settings = settings or Settings()
    registry = ModelRegistry(settings)

    def _safe_load():
        try:
            registry.load()
        except Exception:
            pass  # health keeps reporting 503 with the recorded error

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if auto_load:
            threading.Thread(target=_safe_load, daemon=True).start()
        yield

    app = FastAPI(title="argsum inference service", version=SCHEMA_VERSION, lifespan=lifespan)
    app.state.registry = registry

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return _error(400, f"malformed request: {exc.errors()}")

    @app.get("/health")
    def health():
        if not registry.loaded:
            detail = {"status": "loading", "schema_version": SCHEMA_VERSION}
            if registry.load_error:
                detail["error"] = registry.load_error
            return JSONResponse(status_code=503, content=detail)
        return {
            "status": "ok",
            "schema_version": SCHEMA_VERSION,
            "models": {
                "embedding": registry.embedding.model_id,
                "paraphrase": registry.paraphrase.model_id,
            },
            "dims": {"embedding": registry.embedding.dim},
        }

    @app.post("/embed")
    def embed(request: EmbedRequest):
        if not registry.loaded:
            return _error(503, "models not loaded")
        if not request.texts:
            return _error(400, "texts must be a non-empty list")
        backend = registry.embedding
        if request.level == "sentence":
            vectors = backend.embed_sentences(request.texts)
            return {
                "schema_version": SCHEMA_VERSION,
                "model_id": backend.model_id,
                "dim": backend.dim,
                "level": "sentence",
                "vectors": vectors.tolist(),
            }
        token_results = backend.embed_tokens(request.texts)
        return {
            "schema_version": SCHEMA_VERSION,
            "model_id": backend.model_id,
            "dim": backend.dim,
            "level": "token",
            "tokens": [tokens for tokens, _ in token_results],
            "vectors": [matrix.tolist() for _, matrix in token_results],
        }

    @app.post("/paraphrase")
    def paraphrase(request: ParaphraseRequest):
        if not registry.loaded:
            return _error(503, "models not loaded")
        if not request.text.strip():
            return _error(400, "text must be non-empty")
        backend = registry.paraphrase
        return {
            "schema_version": SCHEMA_VERSION,
            "model_id": backend.model_id,
            "paraphrase": backend.paraphrase(request.text),
        }

    return app
