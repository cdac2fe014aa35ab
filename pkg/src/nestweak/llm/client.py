"""Chat-completion endpoints: OpenAI-compatible HTTP, deterministic mock, transcript replay."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Protocol, Union

from ..errors import EndpointError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple
    temperature: float = 0.0
    repetition_penalty: float = 1.05
    top_p: float = 1.0
    max_tokens: int = 5000

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(
            {"role": m["role"], "content": m["content"]} for m in self.messages
        ))

    def payload(self) -> dict:
        return {
            "model": self.model,
            "messages": [dict(m) for m in self.messages],
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
            "repetition_penalty": self.repetition_penalty,
        }

    @property
    def key(self) -> str:
        """Content hash identifying this request in a transcript."""
        blob = json.dumps(self.payload(), ensure_ascii=False, sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    @property
    def prompt(self) -> str:
        return self.messages[-1]["content"] if self.messages else ""


@dataclass
class ChatResponse:
    text: str
    finish_reason: str = "stop"
    latency: float = 0.0


class Endpoint(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


class OpenAIEndpoint:
    """POSTs to ``{base_url}/chat/completions``; the API key is read from an environment variable."""

    def __init__(self, base_url: str, api_key_env: str = "OPENAI_API_KEY", timeout: float = 600.0):
        import httpx

        headers = {"Content-Type": "application/json"}
        key = os.environ.get(api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self.url = base_url.rstrip("/") + "/chat/completions"
        self._client = httpx.Client(headers=headers, timeout=timeout)

    def complete(self, request: ChatRequest) -> ChatResponse:
        import httpx

        t0 = time.monotonic()
        try:
            resp = self._client.post(self.url, json=request.payload())
            resp.raise_for_status()
            data = resp.json()
            choice = data["choices"][0]
            return ChatResponse(
                choice["message"]["content"] or "",
                choice.get("finish_reason") or "stop",
                time.monotonic() - t0,
            )
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise EndpointError(f"{self.url}: {exc}") from exc


class MockEndpoint:
    """Answers from fixtures: the longest key found in the prompt selects the response.

    A fixture value of ``None`` simulates a failing request.
    """

    def __init__(self, responses: Mapping[str, Optional[str]], default: Optional[str] = "```{}```"):
        self.responses = dict(responses)
        self.default = default
        self.calls = 0

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "MockEndpoint":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(obj.get("responses", {}), obj.get("default", "```{}```"))

    def complete(self, request: ChatRequest) -> ChatResponse:
        self.calls += 1
        prompt = request.prompt
        hits = [k for k in self.responses if k in prompt]
        text = self.responses[max(hits, key=lambda k: (len(k), k))] if hits else self.default
        if text is None:
            raise EndpointError("mock failure")
        return ChatResponse(text)


class ReplayEndpoint:
    """Serves responses recorded in a transcript, never touching the network."""

    def __init__(self, path: Union[str, Path]):
        self.responses = {}
        for rec in TranscriptStore.load(path):
            if rec.get("response") is not None:
                self.responses[rec["key"]] = rec["response"]

    def complete(self, request: ChatRequest) -> ChatResponse:
        rec = self.responses.get(request.key)
        if rec is None:
            raise EndpointError(f"request {request.key[:12]} not in transcript")
        return ChatResponse(rec["text"], rec.get("finish_reason", "stop"), 0.0)


class TranscriptStore:
    """Append-only JSONL log of requests and responses, one record per line."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, request: ChatRequest, response: Optional[ChatResponse], error: Optional[str] = None) -> None:
        record = {
            "key": request.key,
            "request": request.payload(),
            "response": asdict(response) if response is not None else None,
            "error": error,
        }
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line)
                f.flush()
                os.fsync(f.fileno())

    @staticmethod
    def load(path: Union[str, Path]) -> list[dict]:
        records = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    records.append(json.loads(line))
        return records


@dataclass
class RetryPolicy:
    attempts: int = 3
    backoff: float = 1.0
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)


def complete_with_retries(
    endpoint: Endpoint,
    request: ChatRequest,
    policy: Optional[RetryPolicy] = None,
    transcript: Optional[TranscriptStore] = None,
) -> ChatResponse:
    """Call ``endpoint`` with exponential backoff; raises ``EndpointError`` when every attempt fails."""
    policy = policy or RetryPolicy()
    last = None
    for attempt in range(policy.attempts):
        try:
            response = endpoint.complete(request)
        except EndpointError as exc:
            last = exc
            log.warning("request %s attempt %d failed: %s", request.key[:12], attempt + 1, exc)
            if attempt + 1 < policy.attempts:
                policy.sleep(policy.backoff * 2 ** attempt)
            continue
        if transcript is not None:
            transcript.append(request, response)
        return response
    if transcript is not None:
        transcript.append(request, None, str(last))
    raise EndpointError(f"request failed after {policy.attempts} attempts: {last}")
