from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from argsum.errors import DimensionMismatchError, ProviderUnreachableError, SchemaError
from argsum.remote import RemoteEmbedder, RemoteParaphraser


class StubHandler(BaseHTTPRequestHandler):
    responses: dict[str, tuple[int, dict]] = {}

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        status, body = self.responses.get(self.path, (404, {}))
        payload = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def do_GET(self):
        self.do_POST()

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", StubHandler
    server.shutdown()


def sentence_response(vectors, dim):
    return {"schema_version": "1.0", "model_id": "stub/1", "dim": dim, "level": "sentence", "vectors": vectors}


def test_embed_sentence_level(stub_server):
    endpoint, handler = stub_server
    handler.responses = {"/embed": (200, sentence_response([[1.0, 0.0], [0.0, 1.0]], 2))}
    vectors = RemoteEmbedder(endpoint).embed(["a", "b"])
    assert len(vectors) == 2
    assert vectors[0].provenance == "remote"
    np.testing.assert_allclose(vectors[1].values, [0.0, 1.0])


def test_embed_empty_list_short_circuits(stub_server):
    endpoint, handler = stub_server
    handler.responses = {}
    assert RemoteEmbedder(endpoint).embed([]) == []


def test_embed_dimension_mismatch(stub_server):
    endpoint, handler = stub_server
    handler.responses = {"/embed": (200, sentence_response([[1.0, 0.0, 0.0]], 384))}
    with pytest.raises(DimensionMismatchError):
        RemoteEmbedder(endpoint).embed(["a"])


def test_embed_token_level(stub_server):
    endpoint, handler = stub_server
    handler.responses = {
        "/embed": (
            200,
            {
                "schema_version": "1.0",
                "model_id": "stub/1",
                "dim": 2,
                "level": "token",
                "tokens": [["a", "b"]],
                "vectors": [[[1.0, 0.0], [0.0, 1.0]]],
            },
        )
    }
    (result,) = RemoteEmbedder(endpoint).embed(["a b"], level="token")
    assert result.tokens == ("a", "b")
    assert result.matrix.shape == (2, 2)


def test_unknown_major_version_rejected(stub_server):
    endpoint, handler = stub_server
    handler.responses = {"/embed": (200, {**sentence_response([[1.0]], 1), "schema_version": "2.0"})}
    with pytest.raises(SchemaError, match="schema"):
        RemoteEmbedder(endpoint).embed(["a"])


def test_unreachable_endpoint():
    with pytest.raises(ProviderUnreachableError):
        RemoteEmbedder("http://127.0.0.1:1", timeout=0.2).embed(["a"])


def test_server_error_maps_to_provider_unreachable(stub_server):
    endpoint, handler = stub_server
    handler.responses = {"/embed": (503, {"detail": "loading"})}
    with pytest.raises(ProviderUnreachableError):
        RemoteEmbedder(endpoint).embed(["a"])


def test_paraphrase_round_trip(stub_server):
    endpoint, handler = stub_server
    handler.responses = {
        "/paraphrase": (200, {"schema_version": "1.0", "model_id": "stub/1", "paraphrase": "rearranged text"})
    }
    result = RemoteParaphraser(endpoint).paraphrase("original text")
    assert result.text == "rearranged text"
    assert result.model_id == "stub/1"


def test_paraphrase_empty_response_rejected(stub_server):
    endpoint, handler = stub_server
    handler.responses = {"/paraphrase": (200, {"schema_version": "1.0", "paraphrase": ""})}
    with pytest.raises(SchemaError):
        RemoteParaphraser(endpoint).paraphrase("original text")


def test_health_requires_running_service():
    with pytest.raises(ProviderUnreachableError):
        RemoteEmbedder("http://127.0.0.1:1", timeout=0.2).health()
