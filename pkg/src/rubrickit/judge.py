"""Provider-agnostic judge client: completion transport, structured-output
enforcement with repair retries, transcript logging, and a deterministic
scripted backend for offline runs.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import httpx

from .core import Violation
from .errors import (
    PreconditionError,
    ProviderError,
    ScriptMissError,
    StructuredOutputError,
    TransportError,
)
from .prompts import TEMPERATURES

DEFAULT_MODEL = "gpt-4.1"
DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_RETRIES = 2
DEFAULT_IN_FLIGHT = 4

ENV_API_KEY = "JUDGE_API_KEY"
ENV_BASE_URL = "JUDGE_BASE_URL"
ENV_MODEL = "JUDGE_MODEL"
ENV_SCRIPT = "JUDGE_SCRIPT"

# A validator inspects a parsed JSON value and returns violations (empty = ok).
# Validators must be total: they never raise.
Validator = Callable[[Any], list[Violation]]


@dataclass(frozen=True)
class JudgeConfig:
    """Per-call judging parameters. Temperatures are bound per operation."""

    model: str = ""
    temperature: float = 0.0
    retries: int = DEFAULT_RETRIES
    timeout: float = 60.0
    runs: int = 1

    def __post_init__(self):
        if self.temperature < 0 or self.temperature > 2:
            raise PreconditionError(f"temperature must be in 0..2, got {self.temperature}")
        if self.runs < 1:
            raise PreconditionError(f"run count must be >= 1, got {self.runs}")
        if self.retries < 0:
            raise PreconditionError(f"retries must be >= 0, got {self.retries}")


def default_config(op: str = "*", runs: int = 1, retries: int = DEFAULT_RETRIES) -> JudgeConfig:
    """Config with the operation's bound temperature and the environment model."""
    return JudgeConfig(
        model=os.environ.get(ENV_MODEL, DEFAULT_MODEL),
        temperature=TEMPERATURES.get(op, 0.0),
        retries=retries,
        runs=runs,
    )


def prompt_hash(prompt: str, system: str | None = None) -> str:
    """Content hash used to key scripted responses and name script misses."""
    digest = hashlib.sha256()
    if system:
        digest.update(system.encode("utf-8"))
        digest.update(b"\x00")
    digest.update(prompt.encode("utf-8"))
    return digest.hexdigest()


@dataclass
class TranscriptEntry:
    """One judge attempt. ``parse_outcome`` is filled by the structured layer."""

    id: int
    op: str
    prompt: str
    system: str | None
    response: str
    latency: float
    attempt: int
    parse_outcome: str = "raw"


class Transcript:
    """Append-only log of every judge attempt, including failed parses."""

    def __init__(self):
        self._entries: list[TranscriptEntry] = []
        self._lock = threading.Lock()

    def append(self, op, prompt, system, response, latency, attempt) -> TranscriptEntry:
        with self._lock:
            entry = TranscriptEntry(
                id=len(self._entries),
                op=op,
                prompt=prompt,
                system=system,
                response=response,
                latency=latency,
                attempt=attempt,
            )
            self._entries.append(entry)
            return entry

    def entries(self) -> list[TranscriptEntry]:
        with self._lock:
            return list(self._entries)

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


class Backend(Protocol):
    def complete(
        self, prompt: str, config: JudgeConfig, op: str, system: str | None, script_key: str | None
    ) -> str: ...


class ScriptedBackend:
    """Deterministic stand-in for the live model.

    The script maps operation kind -> {prompt hash -> response}. Either level
    accepts the wildcard "*". A response may be a list, consumed one entry per
    call for that key; after exhaustion the last entry repeats, so plain
    strings behave as identical repeated runs.
    """

    def __init__(self, script: dict[str, dict[str, Any]]):
        self._script = script
        self._cursors: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str) -> "ScriptedBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def _lookup(self, op: str, key: str):
        for op_key in (op, "*"):
            table = self._script.get(op_key)
            if table is None:
                continue
            for entry_key in (key, "*"):
                if entry_key in table:
                    return op_key, entry_key, table[entry_key]
        return None

    def complete(self, prompt, config, op, system=None, script_key=None) -> str:
        key = script_key or prompt_hash(prompt, system)
        hit = self._lookup(op, key)
        if hit is None:
            raise ScriptMissError(
                f"no scripted response for op={op!r} prompt_hash={key}", op=op, prompt_hash=key
            )
        op_key, entry_key, value = hit
        if isinstance(value, list):
            if not value:
                raise ScriptMissError(
                    f"scripted response list for op={op!r} key={entry_key!r} is empty"
                )
            with self._lock:
                cursor_key = (op_key, entry_key)
                i = self._cursors.get(cursor_key, 0)
                self._cursors[cursor_key] = i + 1
            value = value[min(i, len(value) - 1)]
        if not isinstance(value, str):
            value = json.dumps(value, ensure_ascii=False)
        return value


class HttpBackend:
    """Chat-completion transport over the de-facto industry wire schema.

    Request: POST {base_url}/chat/completions with a JSON body
      {"model": ..., "messages": [{"role": "system"|"user", "content": ...}...],
       "temperature": ...}
    Response: {"choices": [{"message": {"content": <text>}}]}
    Any provider that accepts this template can serve as the judge.
    """

    def __init__(
        self,
        model: str | None = None,
        base_url: str | None = None,
        api_key: str | None = None,
    ):
        self.model = model or os.environ.get(ENV_MODEL, DEFAULT_MODEL)
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, DEFAULT_BASE_URL)).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY)
        if not self.api_key:
            raise PreconditionError(f"{ENV_API_KEY} is not configured")

    def complete(self, prompt, config, op, system=None, script_key=None) -> str:
        messages = []
        if system:
            messages.append({"role": "system", "content": system})
        messages.append({"role": "user", "content": prompt})
        body = {
            "model": config.model or self.model,
            "messages": messages,
            "temperature": config.temperature,
        }
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=config.timeout,
            )
        except httpx.HTTPError as exc:
            raise TransportError(f"judge request failed: {exc}") from exc
        if response.status_code >= 400:
            raise ProviderError(
                f"judge provider returned {response.status_code}",
                status=response.status_code,
                payload=response.text,
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(
                "judge response missing choices[0].message.content",
                status=response.status_code,
                payload=response.text,
            ) from exc


def backend_from_env() -> Backend:
    """Scripted backend when JUDGE_SCRIPT is set, live HTTP otherwise."""
    script_path = os.environ.get(ENV_SCRIPT)
    if script_path:
        return ScriptedBackend.from_file(script_path)
    return HttpBackend()


# ---------------------------------------------------------------------------
# Structured-output extraction
# ---------------------------------------------------------------------------

_FENCE = re.compile(r"```[a-zA-Z0-9_-]*\n(.*?)```", re.DOTALL)


def extract_json_block(text: str) -> str | None:
    """First balanced {...} or [...] block, tolerating code fences and prose."""
    fenced = _FENCE.search(text)
    if fenced:
        text = fenced.group(1)
    for opener, closer in (("{", "}"), ("[", "]")):
        start = text.find(opener)
        if start == -1:
            continue
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == opener:
                depth += 1
            elif ch == closer:
                depth -= 1
                if depth == 0:
                    return text[start : i + 1]
        # Unbalanced (truncated) block; try the other bracket kind.
    return None


_REPAIR_TEMPLATE = (
    "\n\n<repair>\nYour previous response could not be used: {complaint}\n"
    "Respond again with ONLY the corrected JSON object, nothing else.\n</repair>"
)


class JudgeClient:
    """Thread-safe facade over a backend: transcripts, retries, concurrency cap."""

    def __init__(self, backend: Backend, in_flight: int = DEFAULT_IN_FLIGHT):
        self.backend = backend
        self.transcript = Transcript()
        self._gate = threading.Semaphore(in_flight)

    def complete(
        self,
        prompt: str,
        config: JudgeConfig,
        *,
        op: str = "*",
        system: str | None = None,
        script_key: str | None = None,
        attempt: int = 0,
    ) -> tuple[str, TranscriptEntry]:
        if not prompt.strip():
            raise PreconditionError("prompt must be non-empty")
        started = time.monotonic()
        with self._gate:
            response = self.backend.complete(prompt, config, op, system, script_key)
        entry = self.transcript.append(
            op, prompt, system, response, time.monotonic() - started, attempt
        )
        return response, entry

    def complete_structured(
        self,
        prompt: str,
        config: JudgeConfig,
        validator: Validator,
        *,
        op: str = "*",
        system: str | None = None,
    ) -> tuple[Any, list[TranscriptEntry]]:
        """Ask, extract, validate; on failure re-ask with a repair instruction.

        Returns the first structure the validator accepts plus the transcript
        entries of every attempt. Never returns a structure the validator
        rejects.
        """
        key = prompt_hash(prompt, system)
        attempts: list[tuple[str, list[Violation]]] = []
        entries: list[TranscriptEntry] = []
        ask = prompt
        for attempt in range(config.retries + 1):
            raw, entry = self.complete(
                ask, config, op=op, system=system, script_key=key, attempt=attempt
            )
            entries.append(entry)
            block = extract_json_block(raw)
            if block is None:
                problems = [Violation("PARSE_ERROR", "no JSON object found in response")]
            else:
                try:
                    parsed = json.loads(block)
                except json.JSONDecodeError as exc:
                    problems = [Violation("PARSE_ERROR", f"invalid JSON: {exc.msg}")]
                else:
                    problems = validator(parsed)
                    if not problems:
                        entry.parse_outcome = "ok"
                        return parsed, entries
            entry.parse_outcome = "; ".join(f"{p.code}: {p.message}" for p in problems)
            attempts.append((raw, problems))
            complaint = "; ".join(p.message for p in problems)
            ask = prompt + _REPAIR_TEMPLATE.format(complaint=complaint)
        raise StructuredOutputError(
            f"no valid structured response after {config.retries + 1} attempts "
            f"(last: {entries[-1].parse_outcome})",
            attempts,
        )


def scripted_client(script: dict[str, dict[str, Any]], in_flight: int = DEFAULT_IN_FLIGHT) -> JudgeClient:
    return JudgeClient(ScriptedBackend(script), in_flight=in_flight)


def client_from_env(in_flight: int = DEFAULT_IN_FLIGHT) -> JudgeClient:
    return JudgeClient(backend_from_env(), in_flight=in_flight)
