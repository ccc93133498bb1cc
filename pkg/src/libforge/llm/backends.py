"""Completion backends: an HTTP chat-completion client and a fixture-replay store."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import httpx

log = logging.getLogger(__name__)

DEFAULT_MODEL = "gpt-3.5-turbo"
MAX_ATTEMPTS = 5
RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class GatewayError(Exception):
    pass


class RetryableError(GatewayError):
    """Transient failure (rate limit, overload) that outlived the retry policy."""


class ReplayMiss(GatewayError):
    def __init__(self, key: str):
        super().__init__(f"no recorded completion for request {key}")
        self.key = key


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple  # ((role, text), ...); the first is the instruction
    temperature: float = 0.0
    max_tokens: int = 1024
    model: str = DEFAULT_MODEL

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a request needs at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    @classmethod
    def user(cls, text: str, **kw) -> "ChatRequest":
        return cls(messages=(("user", text),), **kw)

    @property
    def prompt(self) -> str:
        return "\n\n".join(text for _, text in self.messages)

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": r, "content": t} for r, t in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def key(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()

    @classmethod
    def from_json(cls, d: dict) -> "ChatRequest":
        return cls(messages=tuple((m["role"], m["content"]) for m in d["messages"]),
                   temperature=d.get("temperature", 0.0), max_tokens=d.get("max_tokens", 1024),
                   model=d.get("model", DEFAULT_MODEL))


class Backend:
    id = "abstract"

    def complete(self, req: ChatRequest) -> str:
        raise NotImplementedError


class HttpBackend(Backend):
    """OpenAI-style ``POST {base_url}/chat/completions`` client.

    Rate limits and server overloads are retried with exponential backoff,
    at most ``MAX_ATTEMPTS`` attempts in total.
    """

    id = "http"

    def __init__(self, base_url: str, api_key: str | None = None, *, timeout: float = 120.0,
                 transport: httpx.BaseTransport | None = None, backoff: float = 1.0,
                 sleep: Callable[[float], None] = time.sleep, max_attempts: int = MAX_ATTEMPTS):
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self.client = httpx.Client(base_url=base_url.rstrip("/"), headers=headers,
                                   timeout=timeout, transport=transport)
        self.backoff = backoff
        self.sleep = sleep
        self.max_attempts = min(max_attempts, MAX_ATTEMPTS)
        self.attempts = 0

    @classmethod
    def from_env(cls, base_var="LIBFORGE_API_BASE", key_var="LIBFORGE_API_KEY", **kw) -> "HttpBackend":
        base = os.environ.get(base_var)
        if not base:
            raise GatewayError(f"set {base_var} to the chat-completion API base URL")
        return cls(base, os.environ.get(key_var), **kw)

    def complete(self, req: ChatRequest) -> str:
        last = ""
        for attempt in range(1, self.max_attempts + 1):
            self.attempts += 1
            try:
                resp = self.client.post("/chat/completions", json=req.to_json())
            except httpx.TransportError as err:
                raise GatewayError(f"network failure: {err}") from err
            if resp.status_code in RETRYABLE_STATUS:
                last = f"HTTP {resp.status_code}"
                if attempt < self.max_attempts:
                    delay = self.backoff * 2 ** (attempt - 1)
                    log.warning("%s from completion API; retrying in %.1fs", last, delay)
                    self.sleep(delay)
                continue
            if not resp.is_success:
                raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as err:
                raise GatewayError(f"malformed completion response: {err}") from err
        raise RetryableError(f"giving up after {self.max_attempts} attempts ({last})")


class ReplayBackend(Backend):
    """Serves completions recorded as ``<fixtures>/<sha256>.json`` files.

    In strict mode a missing fixture raises :class:`ReplayMiss`; otherwise
    ``default`` is returned.
    """

    id = "replay"

    def __init__(self, fixtures_dir, strict: bool = True, default: str = ""):
        self.dir = Path(fixtures_dir)
        self.strict = strict
        self.default = default
        self.misses: list[str] = []

    def path_for(self, key: str) -> Path:
        return self.dir / f"{key}.json"

    def complete(self, req: ChatRequest) -> str:
        key = req.key()
        path = self.path_for(key)
        if not path.exists():
            self.misses.append(key)
            if self.strict:
                raise ReplayMiss(key)
            return self.default
        return json.loads(path.read_text(encoding="utf-8"))["completion"]


def write_fixture(fixtures_dir, req: ChatRequest, completion: str) -> Path:
    d = Path(fixtures_dir)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{req.key()}.json"
    body = {"key": req.key(), "request": req.to_json(), "completion": completion}
    path.write_text(json.dumps(body, sort_keys=True, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


class RecordingBackend(Backend):
    """Delegates to ``inner`` and stores each exchange as a replay fixture."""

    id = "record"

    def __init__(self, inner: Backend, fixtures_dir):
        self.inner = inner
        self.dir = Path(fixtures_dir)
        self._lock = threading.Lock()

    def complete(self, req: ChatRequest) -> str:
        text = self.inner.complete(req)
        with self._lock:
            write_fixture(self.dir, req, text)
        return text


class FunctionBackend(Backend):
    """Answers with a Python callable; handy for scripted responders."""

    id = "function"

    def __init__(self, fn: Callable[[ChatRequest], str]):
        self.fn = fn
        self.requests: list[ChatRequest] = []
        self._lock = threading.Lock()

    def complete(self, req: ChatRequest) -> str:
        with self._lock:
            self.requests.append(req)
        return self.fn(req)


def list_fixtures(fixtures_dir) -> list[dict]:
    out = []
    for path in sorted(Path(fixtures_dir).glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        first = data["request"]["messages"][0]["content"].strip().splitlines()
        out.append({"key": data["key"], "first_line": first[0] if first else "",
                    "completion_chars": len(data["completion"])})
    return out


def fixtures_digest(fixtures_dir) -> str | None:
    d = Path(fixtures_dir)
    if not d.is_dir():
        return None
    h = hashlib.sha256()
    for path in sorted(d.glob("*.json")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()
