"""Chat-completion backends behind one interface.

Two implementations: an HTTP adapter for hosted chat-completion endpoints and
a scripted mock keyed by (task, stage, round) for hermetic experiments. Every
call through complete() lands in the completion log, failures included.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

import requests

from .prompting import ASSISTANT, EmptyCompletion, PromptBundle
from .tokens import TokenCounter, approx_count

API_KEY_ENV = "UNIPAR_API_KEY"
API_BASE_ENV = "UNIPAR_API_BASE"

STAGES = ("translate", "compile_repair", "exec_repair", "transplant_repair")

DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_S = 2.0


class LLMError(Exception):
    retryable = False


class TransportError(LLMError):
    retryable = True


class RateLimited(LLMError):
    retryable = True


class ContextOverflow(LLMError):
    """Prompt estimate plus max_tokens exceeds the backend's context window."""


class ScriptMiss(LLMError):
    """The mock script has no entry for the requested key."""


class BackendConfigError(LLMError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    temperature: float = 0.2
    top_p: float = 0.9
    max_tokens: int = 15000
    model_id: str = "default"

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class CallContext:
    """Where in the pipeline a completion is requested; keys the mock script."""

    task_id: str = ""
    stage: str = "translate"
    round: int = 0


@dataclass
class CompletionRecord:
    prompt_hash: str
    response: str
    latency_ms: int
    provider: str
    config: GenerationConfig
    context: CallContext = field(default_factory=CallContext)
    attempts: int = 1
    error: str | None = None


class CompletionLog:
    """Serialized single-writer append channel for completion records."""

    def __init__(self, path: str | Path | None = None):
        self._lock = threading.Lock()
        self._records: list[CompletionRecord] = []
        self._path = Path(path) if path else None

    def append(self, record: CompletionRecord) -> None:
        with self._lock:
            self._records.append(record)
            if self._path:
                entry = asdict(record)
                entry["config"] = asdict(record.config)
                entry["context"] = asdict(record.context)
                with self._path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def records(self) -> list[CompletionRecord]:
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


def prompt_hash(bundle: PromptBundle) -> str:
    return hashlib.sha256(bundle.text().encode("utf-8")).hexdigest()


def response_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Backend(Protocol):
    provider: str
    context_limit: int | None

    def complete_once(
        self, bundle: PromptBundle, config: GenerationConfig, context: CallContext
    ) -> str: ...


@dataclass(frozen=True)
class ScriptedBehavior:
    task_id: str
    stage: str
    round: int
    response: str

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.task_id, self.stage, self.round)


def load_script(path: str | Path) -> list[ScriptedBehavior]:
    """Read a JSONL script; each line holds task_id, stage, round, response."""
    behaviors = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        raw = json.loads(line)
        try:
            behaviors.append(
                ScriptedBehavior(
                    task_id=raw["task_id"],
                    stage=raw["stage"],
                    round=int(raw["round"]),
                    response=raw["response"],
                )
            )
        except KeyError as exc:
            raise BackendConfigError(f"{path}:{i}: missing field {exc}") from exc
    return behaviors


class MockBackend:
    """Deterministic scripted stand-in for a hosted model."""

    provider = "mock"

    def __init__(
        self,
        behaviors: Iterable[ScriptedBehavior] = (),
        miss_policy: str = "error",
        context_limit: int | None = None,
    ):
        if miss_policy not in ("error", "echo-input"):
            raise BackendConfigError(f"unknown miss policy {miss_policy!r}")
        self.miss_policy = miss_policy
        self.context_limit = context_limit
        self._responses: dict[tuple[str, str, int], str] = {}
        for behavior in behaviors:
            if behavior.stage not in STAGES:
                raise BackendConfigError(f"unknown stage {behavior.stage!r}")
            if behavior.key in self._responses:
                raise BackendConfigError(f"duplicate script key {behavior.key}")
            self._responses[behavior.key] = behavior.response

    @classmethod
    def from_file(cls, path: str | Path, miss_policy: str = "error") -> "MockBackend":
        return cls(load_script(path), miss_policy=miss_policy)

    def complete_once(
        self, bundle: PromptBundle, config: GenerationConfig, context: CallContext
    ) -> str:
        key = (context.task_id, context.stage, context.round)
        hit = self._responses.get(key)
        if hit is not None:
            return hit
        if self.miss_policy == "echo-input":
            return bundle.turns[-1][1] if bundle.turns else bundle.system
        raise ScriptMiss(f"no scripted response for {key}")


class HttpBackend:
    """Adapter for OpenAI-style chat-completion HTTP endpoints.

    Field mapping is documented in docs/providers.md; credentials come from
    the environment only, never from configuration files.
    """

    provider = "http"

    def __init__(
        self,
        base_url: str | None = None,
        path: str = "/v1/chat/completions",
        api_key: str | None = None,
        timeout_s: float = 120.0,
        context_limit: int | None = None,
        extra_headers: dict[str, str] | None = None,
    ):
        base = base_url or os.environ.get(API_BASE_ENV)
        if not base:
            raise BackendConfigError(
                f"no base URL: pass one or set {API_BASE_ENV} in the environment"
            )
        self.url = base.rstrip("/") + path
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout_s = timeout_s
        self.context_limit = context_limit
        self.extra_headers = dict(extra_headers or {})

    def complete_once(
        self, bundle: PromptBundle, config: GenerationConfig, context: CallContext
    ) -> str:
        messages = [{"role": "system", "content": bundle.system}]
        for role, text in bundle.turns:
            messages.append(
                {"role": "assistant" if role == ASSISTANT else "user", "content": text}
            )
        payload = {
            "model": config.model_id,
            "messages": messages,
            "temperature": config.temperature,
            "top_p": config.top_p,
            "max_tokens": config.max_tokens,
        }
        headers = {"Content-Type": "application/json", **self.extra_headers}
        if self.api_key:
            headers.setdefault("Authorization", f"Bearer {self.api_key}")
            headers.setdefault("api-key", self.api_key)
        try:
            reply = requests.post(self.url, json=payload, headers=headers, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise TransportError(f"request to {self.url} failed: {exc}") from exc
        if reply.status_code == 429:
            raise RateLimited(f"{self.url} returned 429")
        if reply.status_code >= 500:
            raise TransportError(f"{self.url} returned {reply.status_code}")
        if reply.status_code != 200:
            raise LLMError(f"{self.url} returned {reply.status_code}: {reply.text[:500]}")
        try:
            content = reply.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise LLMError(f"malformed completion payload from {self.url}: {exc}") from exc
        if not content:
            raise EmptyCompletion(f"{self.url} returned an empty completion")
        return content


def estimate_context(bundle: PromptBundle, counter: TokenCounter = approx_count) -> int:
    return counter(bundle.text())


def complete(
    bundle: PromptBundle,
    config: GenerationConfig,
    backend: Backend,
    context: CallContext = CallContext(),
    log: CompletionLog | None = None,
    counter: TokenCounter = approx_count,
    retries: int = DEFAULT_RETRIES,
    backoff_s: float = DEFAULT_BACKOFF_S,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Complete a prompt with retry on transient transport failures.

    Exactly one CompletionRecord is appended per invocation, whether the call
    ultimately succeeded or not.
    """
    digest = prompt_hash(bundle)
    started = time.monotonic()

    def record(response: str, attempts: int, error: str | None) -> None:
        if log is not None:
            log.append(
                CompletionRecord(
                    prompt_hash=digest,
                    response=response,
                    latency_ms=int((time.monotonic() - started) * 1000),
                    provider=backend.provider,
                    config=config,
                    context=context,
                    attempts=attempts,
                    error=error,
                )
            )

    limit = backend.context_limit
    if limit is not None:
        estimate = estimate_context(bundle, counter)
        if estimate + config.max_tokens > limit:
            record("", 0, "context overflow")
            raise ContextOverflow(
                f"prompt estimate {estimate} + max_tokens {config.max_tokens} "
                f"exceeds context limit {limit}"
            )

    attempt = 0
    while True:
        attempt += 1
        try:
            response = backend.complete_once(bundle, config, context)
        except LLMError as exc:
            if exc.retryable and attempt <= retries:
                sleep(backoff_s * 2 ** (attempt - 1))
                continue
            record("", attempt, f"{type(exc).__name__}: {exc}")
            raise
        except EmptyCompletion as exc:
            record("", attempt, f"EmptyCompletion: {exc}")
            raise
        if response == "":
            record("", attempt, "EmptyCompletion: backend returned empty text")
            raise EmptyCompletion("backend returned empty text")
        record(response, attempt, None)
        return response
