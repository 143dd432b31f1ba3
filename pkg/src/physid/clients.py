"""Transport adapters for the external model endpoints.

Every request is the same JSON shape, ``{"task", "prompt", "image_b64"}``,
answered by ``{"text": ...}``.  The fixture client replays recorded
responses keyed by the sha256 of the canonical request JSON; the HTTP client
talks to a live endpoint and can record fixtures as it goes, so anything that
worked live replays identically offline.
"""

from __future__ import annotations

import hashlib
import json
import threading
import urllib.error
import urllib.request
from abc import ABC, abstractmethod
from pathlib import Path

from .errors import ClientUnavailable

TASKS = ("t1", "t2", "t3", "t4", "mesh", "segment")


def canonical_request(task: str, prompt: str, image_b64: str) -> dict:
    return {"task": task, "prompt": prompt, "image_b64": image_b64}


def request_hash(request: dict) -> str:
    payload = json.dumps(request, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ExternalClient(ABC):
    """Shared surface: complete(task, prompt, image) -> response text.

    Keeps a thread-safe call log of (task, request hash) so orchestration
    tests can assert which stages actually ran.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.call_log: list[tuple[str, str]] = []

    def complete(self, task: str, prompt: str, image_b64: str) -> str:
        request = canonical_request(task, prompt, image_b64)
        digest = request_hash(request)
        with self._lock:
            self.call_log.append((task, digest))
        return self._complete(request, digest)

    def calls_for(self, task: str) -> int:
        with self._lock:
            return sum(1 for t, _ in self.call_log if t == task)

    @abstractmethod
    def _complete(self, request: dict, digest: str) -> str:
        ...


class FixtureClient(ExternalClient):
    """Offline replay from a directory of ``<task>/<sha256>.json`` files."""

    def __init__(self, root):
        super().__init__()
        self.root = Path(root)

    def fixture_path(self, task: str, digest: str) -> Path:
        return self.root / task / f"{digest}.json"

    def _complete(self, request: dict, digest: str) -> str:
        path = self.fixture_path(request["task"], digest)
        if not path.is_file():
            raise ClientUnavailable(
                f"no fixture for task {request['task']!r} (expected {path})"
            )
        with path.open("r", encoding="utf-8") as fh:
            record = json.load(fh)
        return record["response"]["text"]


def write_fixture(root, request: dict, response_text: str) -> Path:
    """Store a response so a FixtureClient can replay it later."""
    digest = request_hash(request)
    path = Path(root) / request["task"] / f"{digest}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump({"request": request, "response": {"text": response_text}}, fh,
                  indent=2)
    return path


class HttpClient(ExternalClient):
    """Live endpoint adapter: POST the request JSON, read ``{"text"}`` back.

    With ``record_to`` set, every successful response is also written as a
    fixture file.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, record_to=None):
        super().__init__()
        self.endpoint = endpoint
        self.timeout = timeout
        self.record_to = record_to

    def _complete(self, request: dict, digest: str) -> str:
        body = json.dumps(request).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint, data=body,
            headers={"Content-Type": "application/json"}, method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise ClientUnavailable(f"endpoint {self.endpoint} failed: {exc}") from exc
        if not isinstance(payload, dict) or "text" not in payload:
            raise ClientUnavailable(
                f"endpoint {self.endpoint} returned malformed payload"
            )
        text = payload["text"]
        if self.record_to is not None:
            write_fixture(self.record_to, request, text)
        return text
