"""HTTP transport for chat-completion and embedding services, with fixture replay.

Requests are keyed by a SHA-256 digest of their canonical JSON (sorted keys,
no insignificant whitespace), so field order never changes the key. In
``replay`` mode the digest is looked up in a fixture directory and no socket
is ever opened; ``record`` mode calls the live service and stores each
response under its digest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import httpx

log = logging.getLogger(__name__)

API_KEY_ENV = "HDLDBG_API_KEY"
MODES = ("live", "replay", "record")
ROLES = ("system", "user", "assistant")
RETRY_STATUS = frozenset({429, 500, 502, 503, 504})


class TransportError(RuntimeError):
    pass


class MissingFixture(TransportError):
    def __init__(self, digest: str, path: str):
        self.digest = digest
        super().__init__(f"no replay fixture for {path} request digest {digest}")


class RetriesExhausted(TransportError):
    pass


class MalformedResponse(TransportError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role != "system" and not self.content:
            raise ValueError(f"{self.role} message must have content")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class GenRequest:
    messages: Sequence[ChatMessage]
    temperature: float = 0.0
    max_tokens: int = 1024
    sample_seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must be in [0, 2], got {self.temperature}")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_delay: float = 1.0


def request_digest(path: str, body: dict) -> str:
    blob = json.dumps({"path": path, "body": body}, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class FixtureStore:
    """Directory of ``<digest>.json`` files, each holding one response body."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def path(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def get(self, digest: str) -> Optional[dict]:
        p = self.path(digest)
        if not p.exists():
            return None
        return json.loads(p.read_text(encoding="utf-8"))

    def put(self, digest: str, response: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        text = json.dumps(response, indent=1, sort_keys=True, ensure_ascii=False) + "\n"
        self.path(digest).write_text(text, encoding="utf-8")


@dataclass
class Transport:
    mode: str = "replay"
    base_url: Optional[str] = None
    fixtures: Optional[Union[str, Path]] = None
    chat_model: Optional[str] = None
    embedding_model: Optional[str] = None
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    timeout: float = 60.0
    max_in_flight: int = 4
    client: Optional[httpx.Client] = None
    sleep: Callable[[float], None] = time.sleep
    calls: int = field(default=0, init=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"transport mode must be one of {MODES}")
        if self.mode in ("replay", "record") and self.fixtures is None:
            raise ValueError(f"{self.mode} mode needs a fixture directory")
        if self.mode in ("live", "record") and not self.base_url and self.client is None:
            raise ValueError(f"{self.mode} mode needs an endpoint base URL")
        self.store = FixtureStore(self.fixtures) if self.fixtures is not None else None
        self._slots = threading.BoundedSemaphore(self.max_in_flight)
        self._lock = threading.Lock()

    def _http(self) -> httpx.Client:
        if self.client is None:
            headers = {}
            key = os.environ.get(API_KEY_ENV)
            if key:
                headers["Authorization"] = f"Bearer {key}"
            self.client = httpx.Client(base_url=self.base_url, headers=headers, timeout=self.timeout)
        return self.client

    def post(self, path: str, body: dict) -> dict:
        digest = request_digest(path, body)
        with self._lock:
            self.calls += 1
        if self.mode == "replay":
            recorded = self.store.get(digest)
            if recorded is None:
                raise MissingFixture(digest, path)
            return recorded
        response = self._post_live(path, body)
        if self.mode == "record":
            self.store.put(digest, response)
        return response

    def _post_live(self, path: str, body: dict) -> dict:
        last: Optional[Exception] = None
        for attempt in range(self.retry.max_attempts):
            if attempt:
                self.sleep(self.retry.base_delay * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self._http().post(path, json=body)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last = exc
                log.warning("%s attempt %d failed: %s", path, attempt + 1, exc)
                continue
            if resp.status_code in RETRY_STATUS:
                last = TransportError(f"HTTP {resp.status_code}")
                log.warning("%s attempt %d got HTTP %d", path, attempt + 1, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"{path}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise MalformedResponse(f"{path}: response is not JSON") from exc
        raise RetriesExhausted(f"{path}: gave up after {self.retry.max_attempts} attempts: {last}")


def complete(transport: Transport, request: GenRequest) -> str:
    body = {
        "model": transport.chat_model,
        "messages": [m.to_dict() for m in request.messages],
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    }
    if request.sample_seed is not None:
        body["seed"] = request.sample_seed
    data = transport.post("/chat/completions", body)
    try:
        content = data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse("chat response lacks choices[0].message.content") from exc
    if not isinstance(content, str):
        raise MalformedResponse("chat response content is not text")
    return content


def embed(transport: Transport, texts: Sequence[str], model: Optional[str] = None) -> List[List[float]]:
    if not texts:
        raise ValueError("embed needs at least one text")
    body = {"model": model or transport.embedding_model, "input": list(texts)}
    data = transport.post("/embeddings", body)
    try:
        vectors = [[float(x) for x in row["embedding"]] for row in data["data"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedResponse("embedding response lacks data[].embedding") from exc
    if len(vectors) != len(texts):
        raise MalformedResponse(f"expected {len(texts)} embeddings, got {len(vectors)}")
    return vectors


def chat_response(content: str) -> dict:
    """Minimal response body in the chat-completion wire shape."""
    return {"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}


def embedding_response(vectors: Sequence[Sequence[float]]) -> dict:
    return {"data": [{"index": i, "embedding": list(v)} for i, v in enumerate(vectors)]}
