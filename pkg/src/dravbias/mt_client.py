"""Translation backends: live chat-completion HTTP, record, and offline replay.

Fixture files are JSON Lines, one exchange per line::

    {"key": {"pair_id": ..., "level": ..., "prompt_digest": ...},
     "request": {"prompt": ..., "language": ..., "level": ..., "pair_id": ...},
     "response": {"translation": ..., "payload_digest": ..., "latency_ms": ...,
                  "timestamp": ...}}

Replay looks exchanges up by exact key and never falls through to the
network.  The file is append-only; when a key repeats, the last line wins.

HTTP wire shape (request)::

    POST <endpoint>
    Authorization: Bearer $<auth_env>
    {"model": <model>, "temperature": 0,
     "messages": [{"role": "user", "content": <prompt>}]}

and the translation is read from ``choices[0].message.content``.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

import httpx

from .cot_prompting import PromptPlan
from .errors import AuthMissing, BackendError, ConfigError, FixtureMiss, RateLimited, Timeout

log = logging.getLogger(__name__)

LIVE, REPLAY, RECORD = "live", "replay", "record"


@dataclass(frozen=True)
class BackendConfig:
    kind: str = REPLAY
    endpoint: Optional[str] = None
    model: str = "gpt-4o-mini"
    auth_env: Optional[str] = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    rate_limit_rpm: float = 60.0
    fixture_path: Optional[str] = None
    overwrite: bool = False
    backoff_base: float = 1.0
    backoff_cap: float = 30.0

    def validate(self) -> "BackendConfig":
        kind = self.kind.lower()
        if kind not in (LIVE, REPLAY, RECORD):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if kind in (LIVE, RECORD) and not (self.endpoint and self.auth_env):
            raise ConfigError(f"{kind} backend needs endpoint and auth_env")
        if kind == REPLAY and not (self.fixture_path and Path(self.fixture_path).is_file()):
            raise ConfigError(f"replay fixture not found: {self.fixture_path}")
        if kind == RECORD and not self.fixture_path:
            raise ConfigError("record backend needs fixture_path")
        if self.max_retries < 0 or self.rate_limit_rpm <= 0 or self.timeout <= 0:
            raise ConfigError("max_retries >= 0, rate_limit_rpm > 0 and timeout > 0 required")
        return replace(self, kind=kind)


_CONFIG_TYPES = {"timeout": float, "max_retries": int, "rate_limit_rpm": float,
                 "backoff_base": float, "backoff_cap": float}


def load_config(path, **overrides) -> BackendConfig:
    """Read the ``[backend]`` section of an INI-style key = value file.

    Secrets never go in the file: ``auth_env`` names the environment variable
    that holds the token.  Relative fixture paths resolve against the file.
    """
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read config {path}")
    if "backend" not in parser:
        raise ConfigError(f"{path}: missing [backend] section")
    values = {}
    fields = BackendConfig.__dataclass_fields__
    for key, raw in parser["backend"].items():
        if key not in fields:
            raise ConfigError(f"{path}: unknown key {key!r}")
        if key == "overwrite":
            values[key] = parser["backend"].getboolean(key)
        else:
            values[key] = _CONFIG_TYPES.get(key, str)(raw)
    fixture = values.get("fixture_path")
    if fixture and not Path(fixture).is_absolute():
        values["fixture_path"] = str(Path(path).parent / fixture)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return BackendConfig(**values)


def prompt_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def exchange_key(pair_id: str, level: int, prompt_text: str) -> tuple[str, int, str]:
    return (str(pair_id), int(level), prompt_digest(prompt_text))


def backoff_delays(max_retries: int, base: float, cap: float) -> list[float]:
    """Exponential, capped, monotone non-decreasing retry delays."""
    return [min(cap, base * 2 ** i) for i in range(max_retries)]


class RateLimiter:
    """Spaces requests at least ``60 / rpm`` seconds apart; shared per backend."""

    def __init__(self, rpm: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.interval = 60.0 / rpm
        self._clock, self._sleep = clock, sleep
        self._next = None
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            if self._next is not None and self._next > now:
                self._sleep(self._next - now)
                now = self._next
            self._next = now + self.interval


class FixtureStore:
    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[tuple, dict] = {}
        if self.path.is_file():
            with open(self.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        ex = json.loads(line)
                        k = ex["key"]
                        self._index[(str(k["pair_id"]), int(k["level"]), k["prompt_digest"])] = ex
                    except (ValueError, KeyError, TypeError) as exc:
                        raise BackendError(f"{self.path}:{lineno}: bad fixture line ({exc})") from exc

    def __len__(self):
        return len(self._index)

    def get(self, key) -> Optional[dict]:
        return self._index.get(key)

    def append(self, exchange: dict) -> None:
        k = exchange["key"]
        line = json.dumps(exchange, ensure_ascii=False, sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
            self._index[(k["pair_id"], k["level"], k["prompt_digest"])] = exchange


def make_exchange(plan: PromptPlan, pair_id: str, translation: str, payload: bytes,
                  latency_ms: float) -> dict:
    pid, level, digest = exchange_key(pair_id, plan.level, plan.text)
    return {
        "key": {"pair_id": pid, "level": level, "prompt_digest": digest},
        "request": {"prompt": plan.text, "language": plan.language,
                    "level": plan.level, "pair_id": pid},
        "response": {
            "translation": translation,
            "payload_digest": hashlib.sha256(payload).hexdigest(),
            "latency_ms": round(latency_ms, 3),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
    }


class LiveBackend:
    def __init__(self, config: BackendConfig, client: httpx.Client | None = None,
                 sleep: Callable[[float], None] = time.sleep,
                 rate_limiter: RateLimiter | None = None):
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout)
        self._sleep = sleep
        self.rate_limiter = rate_limiter or RateLimiter(config.rate_limit_rpm, sleep=sleep)
        self.calls = 0

    def _token(self) -> str:
        token = os.environ.get(self.config.auth_env or "")
        if not token:
            raise AuthMissing(f"environment variable {self.config.auth_env} is not set")
        return token

    def complete(self, prompt: str) -> tuple[str, bytes, float]:
        """One chat completion with retries; returns (text, raw payload, latency ms)."""
        headers = {"Authorization": f"Bearer {self._token()}"}
        body = {"model": self.config.model, "temperature": 0,
                "messages": [{"role": "user", "content": prompt}]}
        delays = backoff_delays(self.config.max_retries, self.config.backoff_base,
                                self.config.backoff_cap)
        last: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(delays[attempt - 1])
            self.rate_limiter.acquire()
            self.calls += 1
            start = time.perf_counter()
            try:
                resp = self._client.post(self.config.endpoint, json=body, headers=headers,
                                         timeout=self.config.timeout)
            except httpx.TimeoutException:
                last = Timeout(f"request timed out after {self.config.timeout}s")
                log.warning("attempt %d timed out", attempt + 1)
                continue
            except httpx.TransportError as exc:
                last = BackendError(f"transport error: {exc}")
                log.warning("attempt %d transport error: %s", attempt + 1, exc)
                continue
            latency = (time.perf_counter() - start) * 1000
            if resp.status_code == 429:
                last = RateLimited(f"rate limited after {attempt + 1} attempts")
                continue
            if resp.status_code >= 500:
                last = BackendError(f"server error {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                text = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"unexpected response shape: {exc}") from exc
            return text.strip(), resp.content, latency
        raise last

    def translate(self, plan: PromptPlan, pair_id: str = "") -> str:
        return self.complete(plan.text)[0]


class ReplayBackend:
    def __init__(self, config: BackendConfig, store: FixtureStore | None = None):
        self.config = config
        self.store = store or FixtureStore(config.fixture_path)
        self.calls = 0

    def translate(self, plan: PromptPlan, pair_id: str = "") -> str:
        self.calls += 1
        ex = self.store.get(exchange_key(pair_id, plan.level, plan.text))
        if ex is None:
            err = FixtureMiss(f"no recorded exchange for pair {pair_id!r} at level {plan.level}")
            err.pair_id = pair_id
            raise err
        return ex["response"]["translation"]


class RecordBackend:
    """Live translation, appended to the fixture file.

    An already-recorded key is answered from the file unless ``overwrite`` is
    set, in which case a fresh exchange is appended and supersedes it.
    """

    def __init__(self, config: BackendConfig, live: LiveBackend | None = None,
                 store: FixtureStore | None = None):
        self.config = config
        self.live = live or LiveBackend(config)
        self.store = store or FixtureStore(config.fixture_path)
        self.calls = 0

    def translate(self, plan: PromptPlan, pair_id: str = "") -> str:
        self.calls += 1
        existing = self.store.get(exchange_key(pair_id, plan.level, plan.text))
        if existing is not None and not self.config.overwrite:
            return existing["response"]["translation"]
        text, payload, latency = self.live.complete(plan.text)
        self.store.append(make_exchange(plan, pair_id, text, payload, latency))
        return text


def make_backend(config: BackendConfig, **kwargs):
    config = config.validate()
    if config.kind == LIVE:
        return LiveBackend(config, **kwargs)
    if config.kind == RECORD:
        return RecordBackend(config, **kwargs)
    return ReplayBackend(config, **kwargs)


def translate(prompt: PromptPlan, config: BackendConfig, pair_id: str = "") -> str:
    """One-shot convenience wrapper around :func:`make_backend`."""
    return make_backend(config).translate(prompt, pair_id)
