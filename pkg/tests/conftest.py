"""Shared fixtures: in-suite stub scoring servers and small generated corpora."""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from padeval import corpusgen
from padeval.corpusgen import ClassCount, CorpusSpec
from padeval.manifest import BONAFIDE_LABEL, PaisKind


class StubScorer:
    """Minimal in-process scoring endpoint for protocol tests.

    ``respond(body) -> (status, payload_bytes)`` decides each reply; it may
    sleep to simulate a slow candidate. Received request bodies are recorded.
    """

    def __init__(self, respond):
        self.respond = respond
        self.received: list[bytes] = []
        self.content_types: list[str] = []
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length)
                with outer._lock:
                    outer.received.append(body)
                    outer.content_types.append(self.headers.get("Content-Type", ""))
                if self.path != "/score":
                    self.send_error(404)
                    return
                status, payload = outer.respond(body)
                try:
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    self.wfile.write(payload)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (timeout tests); nothing to answer

            def log_message(self, *_args):
                pass

        class Server(ThreadingHTTPServer):
            request_queue_size = 32  # above any max_inflight used in tests

        self.httpd = Server(("127.0.0.1", 0), Handler)
        self.base_url = f"http://127.0.0.1:{self.httpd.server_port}"
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def request_count(self) -> int:
        with self._lock:
            return len(self.received)

    def __enter__(self) -> "StubScorer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


def json_score(value) -> tuple[int, bytes]:
    return 200, json.dumps({"score": value}).encode()


def oracle_score_bytes(body: bytes) -> float:
    """Marker-decoding oracle: bona fide 1.0, attacks 0.0, undecodable 0.5."""
    index = corpusgen.decode_class_index(body)
    if index is None:
        return 0.5
    return 1.0 if index == corpusgen.CLASS_INDEX[BONAFIDE_LABEL] else 0.0


@pytest.fixture
def stub_scorer():
    """Factory fixture: start a StubScorer for the given respond function."""
    servers = []

    def start(respond) -> StubScorer:
        server = StubScorer(respond).__enter__()
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.__exit__()


def small_spec(seed: int = 7, image_size=(32, 32)) -> CorpusSpec:
    """40-sample corpus with every class, sub-type, and country represented."""
    return CorpusSpec(
        name="tiny",
        classes=(
            ClassCount(label=BONAFIDE_LABEL, count=10),
            ClassCount(label=PaisKind.SCREEN.value, count=10),
            ClassCount(label=PaisKind.PRINT.value, detail="gray_print", count=5),
            ClassCount(label=PaisKind.PRINT.value, detail="colour_print", count=5),
            ClassCount(
                label=PaisKind.COMPOSITE.value, detail="physical_composite", count=5
            ),
            ClassCount(
                label=PaisKind.COMPOSITE.value, detail="digital_composite", count=5
            ),
        ),
        countries=("CHL", "GTM", "PAN", "MEX"),
        subjects=8,
        image_size=image_size,
        seed=seed,
    )


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """A generated 40-sample corpus shared across tests: (manifest, directory)."""
    out = tmp_path_factory.mktemp("tiny_corpus")
    manifest = corpusgen.gen_corpus(small_spec(), out)
    return manifest, out
