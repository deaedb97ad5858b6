"""Players other than the hard-coded strategies: remote LLMs and scripted replays."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from . import prompts
from .client import ChatClient, TransportError
from .game import Action, AgentFailure, DEFAULT_MATRIX, PayoffMatrix, RoundRecord, actions_from_string
from .strategies import StrategyAgent

logger = logging.getLogger(__name__)


class ParseFailure(ValueError):
    """The reply holds no usable ``{"action": ...}`` / ``{"answer": ...}`` object."""


@dataclass
class AgentConfig:
    endpoint_url: str
    model_id: str
    temperature: float = 0.7
    api_key_env_var: str | None = "OPENAI_API_KEY"
    max_retries: int = 3
    retry_backoff: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    request_timeout: float = 60.0
    memory_window: int | str = 10
    instructing_variant: str = "plain"
    chat_format: str = "plain_messages"
    requests_per_minute: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must lie in [0, 1]; replies are unusable above 1.0")
        if self.memory_window != "full" and (not isinstance(self.memory_window, int) or self.memory_window < 1):
            raise ValueError("memory_window must be >= 1 or 'full'")
        if self.instructing_variant not in prompts.VARIANTS:
            raise ValueError(f"unknown instructing variant {self.instructing_variant!r}")
        if self.chat_format not in prompts.FORMATS:
            raise ValueError(f"unknown chat format {self.chat_format!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        self.retry_backoff = tuple(self.retry_backoff)

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown agent config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["retry_backoff"] = list(self.retry_backoff)
        return d


def find_json_object(text: str, key: str) -> dict:
    """First well-formed JSON object in ``text`` that has ``key``."""
    decoder = json.JSONDecoder()
    idx = text.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(text, idx)
        except ValueError:
            obj = None
        if isinstance(obj, dict) and key in obj:
            return obj
        idx = text.find("{", idx + 1)
    raise ParseFailure(f"no JSON object with key {key!r} in reply: {text[:120]!r}")


def parse_action(response_text: str) -> tuple[Action, str]:
    obj = find_json_object(response_text, "action")
    value = obj["action"]
    if not isinstance(value, str):
        raise ParseFailure(f"action value is not a string: {value!r}")
    key = value.strip().lower()
    if key == "cooperate":
        action = Action.COOPERATE
    elif key == "defect":
        action = Action.DEFECT
    else:
        raise ParseFailure(f"action value {value!r} is neither Cooperate nor Defect")
    reason = obj.get("reason", "")
    return action, reason if isinstance(reason, str) else json.dumps(reason)


class ScriptedAgent:
    """Plays a fixed list of actions, one per round; running out is an agent failure."""

    def __init__(self, actions: Sequence[Action], label: str = "scripted"):
        self.actions = list(actions)
        self.label = label
        self._next = 0

    def reset(self, matrix: PayoffMatrix = DEFAULT_MATRIX, n_rounds: int = 0) -> None:
        self._next = 0

    def decide(self, history: Sequence[RoundRecord], rng=None) -> Action:
        if self._next >= len(self.actions):
            raise AgentFailure(f"script exhausted after {len(self.actions)} actions")
        action = self.actions[self._next]
        self._next += 1
        return action


class RemoteAgent:
    """An LLM player behind a chat-completion endpoint.

    Each decision assembles the three-part prompt for the current game state and
    issues one request per attempt; parse failures and transport errors are
    retried up to ``max_retries`` times with the configured backoff.
    """

    def __init__(self, config: AgentConfig, label: str | None = None, client: ChatClient | None = None,
                 sleep=time.sleep):
        self.config = config
        self.label = label or config.model_id
        self.client = client or ChatClient(
            config.endpoint_url, config.model_id, config.temperature, config.api_key_env_var,
            config.request_timeout, config.requests_per_minute,
        )
        self.matrix = DEFAULT_MATRIX
        self.n_rounds = 100
        self.reasons: list[str] = []
        self._sleep = sleep

    def reset(self, matrix: PayoffMatrix = DEFAULT_MATRIX, n_rounds: int = 100) -> None:
        self.matrix = matrix
        self.n_rounds = n_rounds
        self.reasons = []

    def prompt(self, history: Sequence[RoundRecord]) -> prompts.PromptBundle:
        c = self.config
        return prompts.build_prompt(history, self.matrix, self.n_rounds, c.memory_window,
                                    c.instructing_variant, c.chat_format)

    def _with_retries(self, messages, parse):
        attempts = self.config.max_retries + 1
        last_error = None
        for attempt in range(attempts):
            if attempt:
                backoff = self.config.retry_backoff
                if backoff:
                    self._sleep(backoff[min(attempt - 1, len(backoff) - 1)])
            try:
                return parse(self.client.complete(messages))
            except (ParseFailure, TransportError) as exc:
                last_error = exc
                logger.info("%s attempt %d/%d failed: %s", self.label, attempt + 1, attempts, exc)
        raise AgentFailure(f"{attempts} attempts failed; last error: {last_error}")

    def decide(self, history: Sequence[RoundRecord], rng: np.random.Generator | None = None) -> Action:
        action, reason = self._with_retries(self.prompt(history).messages(), parse_action)
        self.reasons.append(reason)
        return action

    def ask(self, bundle: prompts.PromptBundle) -> str:
        """Raw reply to a question prompt; only transport errors are retried here."""
        return self._with_retries(bundle.messages(), lambda text: text)


def make_agent(spec: dict | str, label: str | None = None):
    """Build an agent from a config entry.

    Accepted forms: a strategy string (``"TFT"``, ``"URND:0.3"``),
    ``{"type": "strategy", "kind": ...}``, ``{"type": "remote", ...AgentConfig fields}``
    and ``{"type": "scripted", "actions": "CDCD..."}``.
    """
    if isinstance(spec, str):
        return StrategyAgent(spec, label)
    spec = dict(spec)
    kind = spec.pop("type", "strategy")
    lbl = spec.pop("label", None) or label
    if kind == "strategy":
        return StrategyAgent(spec["kind"], lbl)
    if kind == "remote":
        return RemoteAgent(AgentConfig.from_dict(spec), lbl)
    if kind == "scripted":
        actions = spec["actions"]
        if isinstance(actions, str):
            actions = actions_from_string(actions)
        else:
            actions = [Action.parse(a) for a in actions]
        return ScriptedAgent(actions, lbl or "scripted")
    raise ValueError(f"unknown agent type {kind!r}")
