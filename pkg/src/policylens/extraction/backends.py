"""Model backends: a remote chat-completions endpoint and a fixture replayer."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol

import httpx

logger = logging.getLogger(__name__)

TASKS = ("DR", "DC", "PR", "PC", "Action", "Party", "Relation")

#: Deterministic decoding for every task.
DECODING = {"temperature": 0, "max_tokens": 1024}

DEFAULT_API_KEY_ENV = "POLICYLENS_API_KEY"


class BackendError(RuntimeError):
    """Base class for backend failures."""


class TransportError(BackendError):
    """Retryable: network failure, rate limit or server error."""


class AuthError(BackendError):
    """Missing or rejected credentials; not retried."""


class FixtureMissing(BackendError):
    """The mock backend has no recorded response for a request."""


class ModelBackend(Protocol):
    def complete(self, task: str, instruction: str, input_text: str, params: Mapping[str, Any]) -> str:
        ...


def fixture_key(task: str, input_text: str) -> str:
    return hashlib.sha256(f"{task}\x00{input_text}".encode("utf-8")).hexdigest()


class MockBackend:
    """Replays recorded responses keyed by a hash of ``(task, input_text)``.

    Fixture files are JSON documents of the form::

        {"version": 1, "responses": {"<sha256>": {"task": ..., "input": ..., "output": ...}}}

    Every ``*.json`` file in a fixture directory is merged.
    """

    def __init__(self, responses: Mapping[str, Mapping[str, str]] | None = None):
        self._responses = dict(responses or {})

    @classmethod
    def from_path(cls, path: str | Path) -> "MockBackend":
        path = Path(path)
        files = sorted(path.glob("*.json")) if path.is_dir() else [path]
        responses: dict[str, Mapping[str, str]] = {}
        for f in files:
            doc = json.loads(f.read_text(encoding="utf-8"))
            for key, entry in doc.get("responses", {}).items():
                if fixture_key(entry["task"], entry["input"]) != key:
                    raise ValueError(f"{f}: fixture key mismatch for task {entry['task']!r}")
                responses[key] = entry
        return cls(responses)

    def complete(self, task, instruction, input_text, params):
        entry = self._responses.get(fixture_key(task, input_text))
        if entry is None:
            raise FixtureMissing(f"no fixture for task {task} on input {input_text[:60]!r}")
        return entry["output"]


class RecordingBackend:
    """Wraps another backend and records every exchange in mock-fixture form."""

    def __init__(self, inner: ModelBackend):
        self.inner = inner
        self.responses: dict[str, dict[str, str]] = {}
        self._lock = threading.Lock()

    def complete(self, task, instruction, input_text, params):
        output = self.inner.complete(task, instruction, input_text, params)
        with self._lock:
            self.responses[fixture_key(task, input_text)] = {
                "task": task,
                "input": input_text,
                "output": output,
            }
        return output

    def fixture_document(self) -> dict:
        return {"version": 1, "responses": dict(sorted(self.responses.items()))}


@dataclass
class BackendConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    models: dict[str, str] = field(default_factory=dict)
    default_model: str = "gpt-4o-mini"
    workers: int = 4
    max_attempts: int = 3
    backoff_seconds: float = 1.0
    timeout_seconds: float = 60.0
    api_key_env: str = DEFAULT_API_KEY_ENV
    prompts_dir: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "BackendConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if "api_key" in doc:
            raise ValueError("API keys must come from the environment, not the config file")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown backend config field(s): {', '.join(unknown)}")
        unknown_tasks = sorted(set(doc.get("models", {})) - set(TASKS))
        if unknown_tasks:
            raise ValueError(f"unknown task(s) in models: {', '.join(unknown_tasks)}")
        return cls(**doc)

    def model_for(self, task: str) -> str:
        return self.models.get(task, self.default_model)


class RemoteBackend:
    """OpenAI-compatible chat-completions client."""

    def __init__(
        self,
        config: BackendConfig,
        client: httpx.Client | None = None,
        api_key: str | None = None,
    ):
        key = api_key if api_key is not None else os.environ.get(config.api_key_env)
        if not key:
            raise AuthError(
                f"environment variable {config.api_key_env} is not set; "
                "export it with the API key for the configured endpoint"
            )
        self.config = config
        self._key = key
        self._client = client or httpx.Client(timeout=config.timeout_seconds)

    def complete(self, task, instruction, input_text, params):
        body = {
            "model": self.config.model_for(task),
            "messages": [
                {"role": "system", "content": instruction},
                {"role": "user", "content": input_text},
            ],
            **dict(params),
        }
        try:
            resp = self._client.post(
                self.config.endpoint,
                json=body,
                headers={"Authorization": f"Bearer {self._key}"},
            )
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"unexpected response shape: {exc}") from exc


def call_with_retry(
    fn: Callable[[], str],
    attempts: int = 3,
    backoff: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Call ``fn``, retrying :class:`TransportError` with exponential backoff."""
    for attempt in range(attempts):
        try:
            return fn()
        except TransportError as exc:
            if attempt == attempts - 1:
                raise
            delay = backoff * (2 ** attempt)
            logger.warning("transport error (%s); retry %d/%d in %.1fs", exc, attempt + 1, attempts - 1, delay)
            sleep(delay)
    raise AssertionError("unreachable")
