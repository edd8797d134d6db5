"""Chat-completion providers: an HTTP client for ``/v1/chat/completions``
style endpoints and a scripted mock for offline, reproducible runs."""
from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

import httpx

from ..exceptions import (
    AuthError,
    ConfigError,
    GatewayTimeout,
    MalformedResponse,
    MissingCredentials,
    NoIndicesFound,
    NoValidIndex,
    TransportError,
)
from .parsing import IndexListResult, RunawayConfig, parse_index_list, parse_single_index

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChatRequest:
    system: str
    messages: tuple[tuple[str, str], ...]
    deterministic: bool = True
    max_output_tokens: int = 256

    @property
    def prompt(self) -> str:
        """Content of the last user message."""
        for role, content in reversed(self.messages):
            if role == "user":
                return content
        return ""

    def as_messages(self) -> list[dict[str, str]]:
        msgs = [{"role": "system", "content": self.system}] if self.system else []
        msgs.extend({"role": r, "content": c} for r, c in self.messages)
        return msgs


class ChatProvider(Protocol):
    def complete(self, req: ChatRequest) -> str: ...


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-3.5-turbo-16k"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 1.0
    max_concurrency: int = 4
    # request fields sent when greedy decoding is requested
    deterministic_params: dict[str, Any] = field(
        default_factory=lambda: {"temperature": 0.0, "top_p": 1.0}
    )

    def __post_init__(self):
        if self.retries < 0:
            raise ConfigError("retries must be >= 0")
        if self.timeout <= 0:
            raise ConfigError("timeout must be > 0")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")


class HTTPChatProvider:
    """Blocking client, safe to share between threads.

    Transport errors, timeouts, 429 and 5xx responses are retried with
    exponential backoff; 401/403 fail immediately.
    """

    def __init__(
        self,
        cfg: ProviderConfig,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.cfg = cfg
        token = os.environ.get(cfg.api_key_env, "").strip() if cfg.api_key_env else ""
        if cfg.api_key_env and not token:
            raise MissingCredentials(f"environment variable {cfg.api_key_env} is not set")
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = client or httpx.Client(timeout=cfg.timeout)
        self._headers = headers
        self._sleep = sleep
        self._gate = threading.BoundedSemaphore(cfg.max_concurrency)

    def __deepcopy__(self, memo):
        # estimator clones share the connection pool and concurrency gate
        return self

    def payload(self, req: ChatRequest) -> dict[str, Any]:
        body: dict[str, Any] = {
            "model": self.cfg.model,
            "messages": req.as_messages(),
            "max_tokens": req.max_output_tokens,
        }
        if req.deterministic:
            body.update(self.cfg.deterministic_params)
        return body

    def complete(self, req: ChatRequest) -> str:
        body = self.payload(req)
        last: Exception | None = None
        for attempt in range(self.cfg.retries + 1):
            if attempt:
                self._sleep(self.cfg.backoff * 2 ** (attempt - 1))
            try:
                with self._gate:
                    resp = self._client.post(
                        self.cfg.endpoint, json=body, headers=self._headers, timeout=self.cfg.timeout
                    )
            except httpx.TimeoutException as exc:
                last = GatewayTimeout(f"request timed out: {exc}")
                logger.warning("attempt %d timed out", attempt + 1)
                continue
            except httpx.TransportError as exc:
                last = TransportError(f"transport failure: {exc}")
                logger.warning("attempt %d failed: %s", attempt + 1, exc)
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 429 or resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}")
                logger.warning("attempt %d got HTTP %d", attempt + 1, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return _content(resp)
        assert last is not None
        raise last


def _content(resp: httpx.Response) -> str:
    try:
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"unexpected response body: {resp.text[:200]!r}") from exc
    if not isinstance(content, str):
        raise MalformedResponse("message content is not a string")
    return content


@dataclass(frozen=True)
class MockRule:
    match: str
    reply: str = ""
    error: str | None = None  # "transport" | "timeout" | "auth" | "malformed"

    def matches(self, prompt: str) -> bool:
        return self.match == "*" or self.match in prompt


_MARKER = re.compile(r" \[(\d+)\] ")
_ERRORS = {
    "transport": TransportError,
    "timeout": GatewayTimeout,
    "auth": AuthError,
    "malformed": MalformedResponse,
}


def target_sentence_count(prompt: str) -> int:
    """Number of sentences in the last ``Text:`` block of a prompt."""
    head, sep, tail = prompt.rpartition("Text:")
    block = tail if sep else prompt
    return len(_MARKER.findall(block)) + 1


class MockProvider:
    """Deterministic provider driven by ordered (match, reply) rules.

    The first rule whose ``match`` is a substring of the last user message (or
    ``"*"``) wins. Replies may use ``{count}`` (sentences in the target text)
    and ``{median}`` (``count // 2``). A callable ``rule`` replaces the script
    entirely. Every exchange is appended to ``transcript``.
    """

    def __init__(
        self,
        rules: list[MockRule] | None = None,
        rule: Callable[[ChatRequest], str] | None = None,
    ):
        if not rules and rule is None:
            raise ConfigError("mock provider needs rules or a rule callable")
        self.rules = list(rules or [])
        self.rule = rule
        self.transcript: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    def __deepcopy__(self, memo):
        return self

    @classmethod
    def from_file(cls, path: str | Path) -> "MockProvider":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read mock script {path}: {exc}") from exc
        if isinstance(data, dict):
            data = data.get("rules")
        if not isinstance(data, list):
            raise ConfigError("mock script must be a JSON list of {match, reply} rules")
        rules = []
        for i, item in enumerate(data):
            if not isinstance(item, dict) or "match" not in item:
                raise ConfigError(f"mock rule {i} needs a 'match' field")
            if item.get("error") is not None and item["error"] not in _ERRORS:
                raise ConfigError(f"mock rule {i}: unknown error kind {item['error']!r}")
            rules.append(MockRule(str(item["match"]), str(item.get("reply", "")), item.get("error")))
        return cls(rules)

    def complete(self, req: ChatRequest) -> str:
        prompt = req.prompt
        if self.rule is not None:
            reply = self.rule(req)
        else:
            for r in self.rules:
                if r.matches(prompt):
                    if r.error:
                        raise _ERRORS[r.error](f"mock rule {r.match!r} raised {r.error}")
                    reply = r.reply
                    break
            else:
                raise MalformedResponse("no mock rule matched the prompt")
            if "{" in reply:
                count = target_sentence_count(prompt)
                reply = reply.replace("{count}", str(count)).replace("{median}", str(count // 2))
        with self._lock:
            self.transcript.append((prompt, reply))
        return reply


def request_index_list(
    provider: ChatProvider,
    req: ChatRequest,
    max_index: int,
    attempts: int = 2,
    runaway: RunawayConfig = RunawayConfig(),
) -> tuple[IndexListResult | None, list[str]]:
    """Ask for a boundary list, re-asking on runaway or unparseable replies.

    Returns ``(None, replies)`` when every attempt fails so the caller can
    fall back.
    """
    replies = []
    for _ in range(attempts):
        raw = provider.complete(req)
        replies.append(raw)
        try:
            result = parse_index_list(raw, max_index, runaway=runaway)
        except NoIndicesFound:
            continue
        if not result.runaway_detected:
            return result, replies
    return None, replies


def request_single_index(
    provider: ChatProvider, req: ChatRequest, max_index: int, attempts: int = 2
) -> tuple[int | None, list[str]]:
    replies = []
    for _ in range(attempts):
        raw = provider.complete(req)
        replies.append(raw)
        try:
            return parse_single_index(raw, max_index), replies
        except NoValidIndex:
            continue
    return None, replies
