"""Gateway to chat-completion providers.

One request/response contract covers live HTTP vendors, in-process mocks,
and a record/replay cassette transport for deterministic, network-free test
runs. The gateway adds retries with capped exponential backoff, token-bucket
rate limiting, and a usage ledger for token/cost accounting.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .promptkit import estimate_tokens


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    """Transient provider failure; the gateway may retry these."""


class CassetteMissError(GatewayError):
    """Replay saw a request with no recorded response; a test failure signal."""


@dataclass(frozen=True)
class ChatRequest:
    model: str
    system: str
    user: str
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.system or not self.user:
            raise ValueError("system and user texts must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "system": self.system,
            "user": self.user,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChatRequest":
        return cls(
            model=data["model"],
            system=data["system"],
            user=data["user"],
            temperature=data["temperature"],
            max_output_tokens=data["max_output_tokens"],
        )


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be >= 0")

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChatResponse":
        return cls(
            text=data["text"],
            prompt_tokens=data["prompt_tokens"],
            completion_tokens=data["completion_tokens"],
            metadata=data.get("metadata", {}),
        )


def fingerprint(request: ChatRequest) -> str:
    """Stable content hash: equal requests hash equal, any field change differs."""
    canonical = json.dumps(request.to_dict(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- usage accounting ---------------------------------------------------------


@dataclass
class UsageLedger:
    """Cumulative token counts and a cost estimate at a unit price per 1M tokens."""

    prompt_tokens: int = 0
    completion_tokens: int = 0
    requests: int = 0

    def add(self, response: ChatResponse) -> None:
        self.prompt_tokens += response.prompt_tokens
        self.completion_tokens += response.completion_tokens
        self.requests += 1

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def cost(self, price_per_million: float) -> float:
        return self.total_tokens / 1_000_000 * price_per_million

    def snapshot(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "requests": self.requests,
        }


# --- cassettes ------------------------------------------------------------------


class Cassette:
    """Ordered (fingerprint, response) pairs persisted as human-readable JSONL."""

    def __init__(self) -> None:
        self._entries: dict[str, ChatResponse] = {}
        self._order: list[str] = []

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, fp: str) -> bool:
        return fp in self._entries

    def add(self, request: ChatRequest, response: ChatResponse) -> None:
        fp = fingerprint(request)
        if fp in self._entries:
            raise GatewayError(f"duplicate cassette fingerprint {fp}")
        self._entries[fp] = response
        self._order.append(fp)

    def lookup(self, fp: str) -> ChatResponse | None:
        return self._entries.get(fp)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for fp in self._order:
                line = json.dumps(
                    {"fingerprint": fp, "response": self._entries[fp].to_dict()},
                    sort_keys=True,
                    ensure_ascii=False,
                )
                fh.write(line + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Cassette":
        cassette = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                entry = json.loads(line)
                fp = entry["fingerprint"]
                if fp in cassette._entries:
                    raise GatewayError(f"duplicate cassette fingerprint {fp}")
                cassette._entries[fp] = ChatResponse.from_dict(entry["response"])
                cassette._order.append(fp)
        return cassette


# --- transports -------------------------------------------------------------------


class Transport(Protocol):
    def send(self, request: ChatRequest) -> ChatResponse: ...


@dataclass
class MockTransport:
    """Wraps a plain function for in-process fakes; token counts are estimated."""

    fn: Callable[[ChatRequest], "ChatResponse | str"]

    def send(self, request: ChatRequest) -> ChatResponse:
        out = self.fn(request)
        if isinstance(out, ChatResponse):
            return out
        return ChatResponse(
            text=out,
            prompt_tokens=estimate_tokens(request.system) + estimate_tokens(request.user),
            completion_tokens=estimate_tokens(out),
        )


@dataclass
class ReplayTransport:
    """Serves recorded responses only; never contacts the network."""

    cassette: Cassette

    def send(self, request: ChatRequest) -> ChatResponse:
        fp = fingerprint(request)
        response = self.cassette.lookup(fp)
        if response is None:
            raise CassetteMissError(
                f"no cassette entry for fingerprint {fp} (model={request.model!r}, "
                f"user text starts {request.user[:60]!r})"
            )
        return response


class RecordingTransport:
    """Passes through to an inner transport and records every exchange."""

    def __init__(self, inner: Transport, cassette: Cassette | None = None) -> None:
        self.inner = inner
        self.cassette = cassette if cassette is not None else Cassette()

    def send(self, request: ChatRequest) -> ChatResponse:
        fp = fingerprint(request)
        cached = self.cassette.lookup(fp)
        if cached is not None:
            return cached
        response = self.inner.send(request)
        self.cassette.add(request, response)
        return response


@dataclass
class HttpTransport:
    """Generic OpenAI-style chat-completions endpoint over HTTP.

    Credentials come from the named environment variable; the adapter never
    stores the key.
    """

    base_url: str
    api_key_env: str = "SYNTHEX_API_KEY"
    timeout: float = 120.0

    def send(self, request: ChatRequest) -> ChatResponse:
        import httpx

        key = os.environ.get(self.api_key_env, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        body = {
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        try:
            resp = httpx.post(
                self.base_url.rstrip("/") + "/chat/completions",
                json=body,
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
        except Exception as exc:
            raise TransportError(f"chat completion request failed: {exc}") from exc
        data = resp.json()
        usage = data.get("usage", {})
        return ChatResponse(
            text=data["choices"][0]["message"]["content"],
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            metadata={"provider_id": data.get("id", "")},
        )


# --- rate limiting and retries -------------------------------------------------------


class TokenBucket:
    """Requests-per-minute limiter; acquire() blocks until a slot is free."""

    def __init__(
        self,
        requests_per_minute: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if requests_per_minute <= 0:
            raise ValueError("requests_per_minute must be > 0")
        self.capacity = requests_per_minute
        self.tokens = requests_per_minute
        self.fill_rate = requests_per_minute / 60.0
        self.clock = clock
        self.sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self._last) * self.fill_rate)
                self._last = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.fill_rate
            self.sleep(wait)


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 4
    base_delay: float = 0.5
    max_total_delay: float = 30.0  # hard ceiling on cumulative backoff


class Gateway:
    """Thread-safe front door: rate limit, retry, account, delegate to transport."""

    def __init__(
        self,
        transport: Transport,
        retry: RetryPolicy = RetryPolicy(),
        rate_limiter: TokenBucket | None = None,
        ledger: UsageLedger | None = None,
        sleep: Callable[[float], None] = time.sleep,
        max_in_flight: int = 8,
    ) -> None:
        self.transport = transport
        self.retry = retry
        self.rate_limiter = rate_limiter
        self.ledger = ledger if ledger is not None else UsageLedger()
        self._sleep = sleep
        self._ledger_lock = threading.Lock()
        self._in_flight = threading.Semaphore(max_in_flight)

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._in_flight:
            if self.rate_limiter is not None:
                self.rate_limiter.acquire()
            delay = self.retry.base_delay
            spent = 0.0
            last_error: Exception | None = None
            for attempt in range(self.retry.max_attempts):
                try:
                    response = self.transport.send(request)
                except CassetteMissError:
                    raise  # replay misses are deterministic; retrying cannot help
                except TransportError as exc:
                    last_error = exc
                    if attempt == self.retry.max_attempts - 1:
                        break
                    step = min(delay, self.retry.max_total_delay - spent)
                    if step <= 0:
                        break
                    self._sleep(step)
                    spent += step
                    delay *= 2
                else:
                    with self._ledger_lock:
                        self.ledger.add(response)
                    return response
            raise GatewayError(f"transport failed after {self.retry.max_attempts} attempts: {last_error}")

    def ping(self) -> bool:
        """Cheap liveness probe used by the CLI."""
        response = self.complete(
            ChatRequest(model="ping", system="You echo.", user="ping", max_output_tokens=8)
        )
        return bool(response.text)
