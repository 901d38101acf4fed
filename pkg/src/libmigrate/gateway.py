"""Chat-completions client with record/replay and marker-based code extraction."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

import httpx

from libmigrate.errors import (
    ConfigError,
    EndpointError,
    NoCodeFound,
    ReplayMiss,
    TransportError,
    UnbalancedMarkers,
)
from libmigrate.prompts import END_MARKER, START_MARKER, RenderedPrompt

log = logging.getLogger(__name__)

DEFAULT_API_BASE = "https://api.openai.com/v1"
API_BASE_ENV = "MIGRATE_API_BASE"
API_KEY_ENVS = ("MIGRATE_API_KEY", "OPENAI_API_KEY")
MAX_RETRIES = 3


class Mode(str, Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    system_message: str
    user_message: str
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if not 0.0 <= float(self.temperature) <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        object.__setattr__(self, "temperature", float(self.temperature))

    @classmethod
    def from_prompt(cls, model_id: str, prompt: RenderedPrompt, temperature: float = 0.0) -> "CompletionRequest":
        return cls(model_id, prompt.system_message, prompt.user_message, temperature)

    def payload(self) -> dict[str, Any]:
        """Wire body for the chat-completions endpoint; also the canonical form."""
        return {
            "model": self.model_id,
            "messages": [
                {"role": "system", "content": self.system_message},
                {"role": "user", "content": self.user_message},
            ],
            "temperature": self.temperature,
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "CompletionRequest":
        roles = {m["role"]: m["content"] for m in payload["messages"]}
        return cls(payload["model"], roles["system"], roles["user"], payload.get("temperature", 0.0))

    @property
    def digest(self) -> str:
        return canonical_digest(self.payload())


def canonical_digest(payload: Mapping[str, Any]) -> str:
    encoded = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionRecord:
    request_digest: str
    request: Mapping[str, Any]
    raw_response: str
    created_at: str
    mode: Mode = Mode.REPLAY

    def to_json(self) -> str:
        body = {"request": self.request, "response": self.raw_response, "created_at": self.created_at}
        return json.dumps(body, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class ReplayStore:
    """Directory of ``<digest>.json`` records, one per request."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def path_for(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def get(self, digest: str) -> Optional[CompletionRecord]:
        path = self.path_for(digest)
        try:
            data = json.loads(path.read_text("utf-8"))
        except FileNotFoundError:
            return None
        return CompletionRecord(digest, data["request"], data["response"], data["created_at"])

    def put(self, record: CompletionRecord) -> Path:
        with self._lock_for(record.request_digest):
            self.root.mkdir(parents=True, exist_ok=True)
            path = self.path_for(record.request_digest)
            fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".rec-", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(record.to_json())
                os.replace(tmp, path)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
            return path

    def _lock_for(self, digest: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(digest, threading.Lock())


def _utcnow() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


@dataclass
class Gateway:
    """Sends completion requests, or serves them from a replay store.

    Only the first returned choice is ever used. Retries happen on transport
    failures only, so a well-formed response is never re-requested.
    """

    mode: Mode = Mode.REPLAY
    store: Optional[ReplayStore] = None
    api_base: Optional[str] = None
    api_key: Optional[str] = None
    transport: Optional[httpx.BaseTransport] = None
    timeout: float = 120.0
    sleep: Callable[[float], None] = time.sleep
    clock: Callable[[], str] = _utcnow
    used_digests: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.mode = Mode(self.mode)
        if self.mode in (Mode.REPLAY, Mode.RECORD) and self.store is None:
            raise ConfigError(f"{self.mode.value} mode needs a replay store")
        self._client: Optional[httpx.Client] = None
        self._client_lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        digest = request.digest
        self.used_digests.append(digest)
        if self.mode is Mode.REPLAY:
            record = self.store.get(digest)
            if record is None:
                raise ReplayMiss(digest)
            return record.raw_response
        if self.mode is Mode.RECORD:
            record = self.store.get(digest)
            if record is not None:
                # first stored answer wins; never overwrite
                return record.raw_response
        response = self._post(request)
        if self.mode is Mode.RECORD:
            self.store.put(CompletionRecord(digest, request.payload(), response, self.clock(), Mode.LIVE))
        return response

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None

    def _http(self) -> httpx.Client:
        with self._client_lock:
            if self._client is None:
                key = self.api_key or next((os.environ[k] for k in API_KEY_ENVS if os.environ.get(k)), None)
                if not key:
                    raise ConfigError(f"live requests need an API key in {' or '.join(API_KEY_ENVS)}")
                base = self.api_base or os.environ.get(API_BASE_ENV) or DEFAULT_API_BASE
                self._client = httpx.Client(
                    base_url=base.rstrip("/"),
                    headers={"Authorization": f"Bearer {key}"},
                    timeout=self.timeout,
                    transport=self.transport,
                )
            return self._client

    def _post(self, request: CompletionRequest) -> str:
        client = self._http()
        last_error: Exception | None = None
        for attempt in range(MAX_RETRIES + 1):
            if attempt:
                self.sleep(2 ** (attempt - 1))
            try:
                response = client.post("/chat/completions", json=request.payload())
            except httpx.TransportError as exc:
                log.warning("transport error on attempt %d: %s", attempt + 1, exc)
                last_error = exc
                continue
            if not response.is_success:
                raise EndpointError(response.status_code, response.text)
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise EndpointError(response.status_code, response.text) from exc
        raise TransportError(f"giving up after {MAX_RETRIES} retries: {last_error}") from last_error


# extraction


class Fallback(str, Enum):
    NONE = "none"
    FENCE_STRIP = "fence_strip"


@dataclass(frozen=True)
class ExtractedCode:
    code: str
    had_markers: bool
    fallback_used: Fallback = Fallback.NONE


_FENCE = re.compile(r"^\s*```[\w.+-]*\s*$")


def _marker_key(text: str) -> str:
    # tolerate a comment prefix such as "# ### START CODE ###"
    return text.strip().lstrip("# \t")


def _is_marker_line(line: str, marker: str) -> bool:
    stripped = line.strip()
    if stripped == marker.strip():
        return True
    key = _marker_key(marker)
    return bool(key) and _marker_key(stripped) == key


def _trim_blank(lines: list[str]) -> list[str]:
    start, end = 0, len(lines)
    while start < end and not lines[start].strip():
        start += 1
    while end > start and not lines[end - 1].strip():
        end -= 1
    return lines[start:end]


def extract_code(raw: str, start_marker: str = START_MARKER, end_marker: str = END_MARKER) -> ExtractedCode:
    """Recover the code a model wrapped in marker lines.

    Takes everything between the first start-marker line and the last
    end-marker line. Without markers, a single triple-backtick fence is
    stripped instead.

    Raises:
        UnbalancedMarkers: only one kind of marker, or the last end marker
            precedes the first start marker.
        NoCodeFound: no markers and no fence, or nothing between them.
    """
    if not start_marker or not end_marker or start_marker == end_marker:
        raise ValueError("markers must be non-empty and distinct")
    lines = raw.split("\n")
    starts = [i for i, line in enumerate(lines) if _is_marker_line(line, start_marker)]
    ends = [i for i, line in enumerate(lines) if _is_marker_line(line, end_marker)]

    if starts or ends:
        if not starts:
            raise UnbalancedMarkers("end marker without a start marker")
        if not ends:
            raise UnbalancedMarkers("start marker without an end marker")
        first, last = starts[0], ends[-1]
        if last < first:
            raise UnbalancedMarkers("end marker appears before the start marker")
        body = _trim_blank(lines[first + 1:last])
        if not body:
            raise NoCodeFound("markers enclose no code")
        return ExtractedCode("\n".join(body), had_markers=True)

    fences = [i for i, line in enumerate(lines) if _FENCE.match(line)]
    if len(fences) >= 2:
        body = _trim_blank(lines[fences[0] + 1:fences[-1]])
        if body:
            return ExtractedCode("\n".join(body), had_markers=False, fallback_used=Fallback.FENCE_STRIP)
    raise NoCodeFound("response has neither code markers nor a code fence")
