"""Chat-completion backends: a live HTTP client, transcript recording, and replay.

Transcripts make the pipeline's one nondeterministic dependency testable: a
recording backend persists every request/completion pair as a JSON-lines file,
and the replay backend serves them back by request digest, so a whole pipeline
run can be reproduced byte for byte with no model access.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import requests

API_KEY_ENV = "AGENT_LLM_API_KEY"
BASE_URL_ENV = "AGENT_LLM_BASE_URL"


class LlmError(Exception):
    pass


class EndpointError(LlmError):
    def __init__(self, status: int, body: str):
        super().__init__(f"endpoint returned status {status}: {body[:200]}")
        self.status = status
        self.body = body


class RateLimited(LlmError):
    def __init__(self, retry_after: float | None):
        super().__init__(f"rate limited (retry after {retry_after}s)")
        self.retry_after = retry_after


class ReplayMiss(LlmError):
    def __init__(self, digest: str):
        super().__init__(f"no recorded completion for request digest {digest}")
        self.digest = digest


class PersistFailure(LlmError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class ChatExchange:
    """One request to a chat-completion endpoint."""

    messages: tuple[ChatMessage, ...]
    model: str
    temperature: float = 0.0

    def __post_init__(self):
        if not self.messages:
            raise ValueError("exchange must contain at least one message")
        if self.messages[-1].role != "user":
            raise ValueError("last message must have role 'user'")
        for m in self.messages:
            if m.role not in ("system", "user", "assistant"):
                raise ValueError(f"unknown role {m.role!r}")

    def request_payload(self) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": self.temperature,
        }


def request_digest(exchange: ChatExchange) -> str:
    """Digest of the canonicalized request: key-order invariant, text sensitive."""
    canonical = json.dumps(
        exchange.request_payload(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_token_count: int
    completion_token_count: int
    backend: str  # live | replay

    def __post_init__(self):
        if self.prompt_token_count < 0 or self.completion_token_count < 0:
            raise ValueError("token counts must be >= 0")


@dataclass(frozen=True)
class TranscriptRecord:
    digest: str
    request: dict
    text: str
    prompt_tokens: int
    completion_tokens: int


@dataclass
class Transcript:
    """Ordered prompt/completion records, persisted append-only as JSON lines."""

    records: list[TranscriptRecord] = field(default_factory=list)
    run_id: str = ""
    corpus_id: str = ""
    path: Path | None = None

    @classmethod
    def load(cls, path: Path | str) -> "Transcript":
        path = Path(path)
        transcript = cls(path=path)
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                if doc.get("kind") == "meta":
                    transcript.run_id = doc.get("run_id", "")
                    transcript.corpus_id = doc.get("corpus_id", "")
                    continue
                transcript.records.append(
                    TranscriptRecord(
                        digest=doc["digest"],
                        request=doc["request"],
                        text=doc["text"],
                        prompt_tokens=int(doc.get("prompt_tokens", 0)),
                        completion_tokens=int(doc.get("completion_tokens", 0)),
                    )
                )
        return transcript

    def write_meta(self) -> None:
        if self.path is None:
            return
        self._append_line({"kind": "meta", "run_id": self.run_id, "corpus_id": self.corpus_id})

    def _append_line(self, doc: dict) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(doc, ensure_ascii=False) + "\n")
        except OSError as exc:
            raise PersistFailure(f"cannot append to transcript {self.path}: {exc}") from exc

    def append(self, rec: TranscriptRecord) -> None:
        if self.path is not None:
            self._append_line(
                {
                    "kind": "record",
                    "digest": rec.digest,
                    "request": rec.request,
                    "text": rec.text,
                    "prompt_tokens": rec.prompt_tokens,
                    "completion_tokens": rec.completion_tokens,
                }
            )
        self.records.append(rec)


def record(exchange: ChatExchange, completion: Completion, transcript: Transcript) -> Transcript:
    """Append one exchange to a transcript (persisted when it has a path)."""
    transcript.append(
        TranscriptRecord(
            digest=request_digest(exchange),
            request=exchange.request_payload(),
            text=completion.text,
            prompt_tokens=completion.prompt_token_count,
            completion_tokens=completion.completion_token_count,
        )
    )
    return transcript


class ReplayBackend:
    """Serve recorded completions, digest-first with positional fallback.

    Records sharing a digest (repeated identical prompts) are consumed in file
    order, which keeps replays of augmentation fan-outs unambiguous.
    """

    def __init__(self, transcript: Transcript):
        self._queues: dict[str, deque[TranscriptRecord]] = {}
        for rec in transcript.records:
            self._queues.setdefault(rec.digest, deque()).append(rec)
        self._lock = threading.Lock()

    def complete(self, exchange: ChatExchange) -> Completion:
        digest = request_digest(exchange)
        with self._lock:
            queue = self._queues.get(digest)
            if not queue:
                raise ReplayMiss(digest)
            rec = queue.popleft()
        return Completion(
            text=rec.text,
            prompt_token_count=rec.prompt_tokens,
            completion_token_count=rec.completion_tokens,
            backend="replay",
        )


class RecordingBackend:
    """Wrap any backend and persist every exchange it serves."""

    def __init__(self, inner, transcript: Transcript):
        self._inner = inner
        self.transcript = transcript
        self._lock = threading.Lock()

    def complete(self, exchange: ChatExchange) -> Completion:
        completion = self._inner.complete(exchange)
        with self._lock:
            record(exchange, completion, self.transcript)
        return completion


@dataclass(frozen=True)
class LiveConfig:
    base_url: str
    completions_path: str = "/chat/completions"
    api_key: str | None = None
    timeout_secs: float = 60.0
    max_retries: int = 3
    backoff_base_secs: float = 0.5
    text_path: tuple = ("choices", 0, "message", "content")
    prompt_tokens_path: tuple = ("usage", "prompt_tokens")
    completion_tokens_path: tuple = ("usage", "completion_tokens")


def _dig(doc, path):
    node = doc
    for step in path:
        try:
            node = node[step]
        except (KeyError, IndexError, TypeError):
            return None
    return node


class LiveBackend:
    """HTTP client for any chat-completion-shaped endpoint."""

    def __init__(self, config: LiveConfig):
        self.config = config

    def complete(self, exchange: ChatExchange) -> Completion:
        cfg = self.config
        url = cfg.base_url.rstrip("/") + cfg.completions_path
        headers = {}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        for attempt in range(cfg.max_retries + 1):
            try:
                resp = requests.post(
                    url, json=exchange.request_payload(), headers=headers, timeout=cfg.timeout_secs
                )
            except requests.RequestException as exc:
                raise EndpointError(0, str(exc)) from exc
            if resp.status_code == 429:
                retry_after = _parse_retry_after(resp.headers.get("Retry-After"))
                if attempt >= cfg.max_retries:
                    raise RateLimited(retry_after)
                delay = retry_after if retry_after is not None else cfg.backoff_base_secs * 2**attempt
                time.sleep(delay)
                continue
            if not 200 <= resp.status_code < 300:
                raise EndpointError(resp.status_code, resp.text)
            try:
                body = resp.json()
            except ValueError as exc:
                raise EndpointError(resp.status_code, f"non-JSON body: {resp.text[:200]}") from exc
            text = _dig(body, cfg.text_path)
            if not isinstance(text, str):
                raise EndpointError(resp.status_code, "response is missing the completion text")
            return Completion(
                text=text,
                prompt_token_count=int(_dig(body, cfg.prompt_tokens_path) or 0),
                completion_token_count=int(_dig(body, cfg.completion_tokens_path) or 0),
                backend="live",
            )
        raise RateLimited(None)  # unreachable; loop either returns or raises


def _parse_retry_after(value: str | None) -> float | None:
    if value is None:
        return None
    try:
        return float(value)
    except ValueError:
        return None


def token_totals(records) -> tuple[int, float, float]:
    """(sum, mean, sample stddev) of completion token counts; empty -> zeros."""
    counts = [
        r.completion_token_count if isinstance(r, Completion) else int(r) for r in records
    ]
    if not counts:
        return 0, 0.0, 0.0
    total = sum(counts)
    mean = total / len(counts)
    if len(counts) < 2:
        return total, float(mean), 0.0
    var = sum((c - mean) ** 2 for c in counts) / (len(counts) - 1)
    return total, float(mean), var**0.5
