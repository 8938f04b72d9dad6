"""Inference microservice exposing sentence/token embeddings and paraphrasing."""

__version__ = "0.1.0"

from .app import SCHEMA_VERSION, Settings, create_app

__all__ = ["__version__", "SCHEMA_VERSION", "Settings", "create_app"]
