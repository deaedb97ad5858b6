"""OpenAI-compatible chat-completion client with retries and a shared rate limiter."""

from __future__ import annotations

import logging
import os
import threading
import time
from typing import Sequence

import httpx

logger = logging.getLogger(__name__)


class TransportError(RuntimeError):
    """The backend could not be reached or returned an unusable response."""


class TokenBucket:
    """Thread-safe token bucket; ``rate`` requests per minute, bursts up to ``capacity``."""

    def __init__(self, requests_per_minute: float, capacity: float | None = None,
                 clock=time.monotonic, sleep=time.sleep):
        if requests_per_minute <= 0:
            raise ValueError("requests_per_minute must be positive")
        self.rate = requests_per_minute / 60.0
        self.capacity = capacity if capacity is not None else max(1.0, requests_per_minute / 60.0)
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """Block until a token is available; returns the time spent waiting."""
        waited = 0.0
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return waited
                delay = (1.0 - self._tokens) / self.rate
            self._sleep(delay)
            waited += delay


_limiters: dict[str, TokenBucket] = {}
_limiters_lock = threading.Lock()


def limiter_for(endpoint: str, requests_per_minute: float | None) -> TokenBucket | None:
    """One shared bucket per endpoint URL."""
    if not requests_per_minute:
        return None
    with _limiters_lock:
        bucket = _limiters.get(endpoint)
        if bucket is None:
            bucket = _limiters[endpoint] = TokenBucket(requests_per_minute)
        return bucket


class ChatClient:
    """Issues single chat-completion requests. Retry policy lives with the caller."""

    def __init__(self, endpoint_url: str, model_id: str, temperature: float = 0.7,
                 api_key_env_var: str | None = "OPENAI_API_KEY", request_timeout: float = 60.0,
                 requests_per_minute: float | None = None, transport: httpx.BaseTransport | None = None):
        self.endpoint_url = endpoint_url.rstrip("/")
        self.model_id = model_id
        self.temperature = temperature
        self.api_key_env_var = api_key_env_var
        self.limiter = limiter_for(self.endpoint_url, requests_per_minute)
        self._http = httpx.Client(timeout=request_timeout, transport=transport)
        self.n_requests = 0

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env_var:
            key = os.environ.get(self.api_key_env_var)
            if not key:
                raise TransportError(f"environment variable {self.api_key_env_var} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def request_body(self, messages: Sequence[dict]) -> dict:
        return {"model": self.model_id, "temperature": self.temperature, "messages": list(messages)}

    def complete(self, messages: Sequence[dict]) -> str:
        if self.limiter is not None:
            self.limiter.acquire()
        self.n_requests += 1
        url = f"{self.endpoint_url}/chat/completions"
        try:
            resp = self._http.post(url, json=self.request_body(messages), headers=self._headers())
        except httpx.HTTPError as exc:
            raise TransportError(f"POST {url} failed: {exc!r}") from exc
        if resp.status_code != 200:
            raise TransportError(f"POST {url} returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected reply shape from {url}: {exc!r}") from exc

    def close(self) -> None:
        self._http.close()
