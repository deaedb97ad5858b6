"""The eight canonical IPD strategies.

Every strategy is expressed twice: as a pure function of the observed
history (:func:`next_action`, used for SFEM prescriptions) and as an
incremental agent (:class:`StrategyAgent`) that keeps a small
:class:`StrategyState`. The two must agree round for round.

Histories are sequences of :class:`~ipdlab.game.RoundRecord` oriented so
that the deciding player sits in seat A.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .game import C, D, DEFAULT_MATRIX, Action, GameTrace, PayoffMatrix, RoundRecord

DETERMINISTIC = ("AC", "AD", "TFT", "STFT", "GRIM", "WSLS")
NAMES = DETERMINISTIC + ("RND", "URND")


@dataclass(frozen=True)
class StrategyKind:
    name: str
    p: float | None = None

    def __post_init__(self):
        if self.name not in NAMES:
            raise ValueError(f"unknown strategy {self.name!r}")
        if self.name == "URND":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError(f"URND needs p in [0, 1], got {self.p!r}")
        elif self.name == "RND":
            object.__setattr__(self, "p", 0.5)
        elif self.p is not None:
            raise ValueError(f"{self.name} takes no parameter")

    @property
    def deterministic(self) -> bool:
        return self.name in DETERMINISTIC

    @classmethod
    def parse(cls, text: str) -> "StrategyKind":
        text = text.strip()
        if text.startswith("URND:"):
            return cls("URND", float(text[5:]))
        return cls(text)

    def __str__(self) -> str:
        if self.name == "URND":
            return f"URND:{self.p:g}"
        return self.name


def _kind(kind) -> StrategyKind:
    return kind if isinstance(kind, StrategyKind) else StrategyKind.parse(kind)


def next_action(kind: StrategyKind | str, history: Sequence[RoundRecord],
                rng: np.random.Generator | None = None,
                m: PayoffMatrix = DEFAULT_MATRIX) -> Action:
    """Action prescribed by ``kind`` after the completed rounds in ``history``."""
    kind = _kind(kind)
    name = kind.name
    if name in ("RND", "URND"):
        if rng is None:
            raise ValueError(f"{kind} needs an rng")
        return C if rng.random() < kind.p else D
    if name == "AC":
        return C
    if name == "AD":
        return D
    if not history:
        return D if name == "STFT" else C
    last = history[-1]
    if name in ("TFT", "STFT"):
        return last.action_b
    if name == "GRIM":
        return D if any(r.action_b is D for r in history) else C
    # WSLS: stay after R or T, shift otherwise
    if last.payoff_a in (m.R, m.T):
        return last.action_a
    return D if last.action_a is C else C


@dataclass
class StrategyState:
    opponent_defected_ever: bool = False
    last_own_action: Action | None = None
    last_opponent_action: Action | None = None
    last_own_payoff: int | None = None

    def update(self, rec: RoundRecord) -> None:
        self.opponent_defected_ever |= rec.action_b is D
        self.last_own_action = rec.action_a
        self.last_opponent_action = rec.action_b
        self.last_own_payoff = rec.payoff_a


class StrategyAgent:
    """A live player driven by one of the canonical strategies."""

    def __init__(self, kind: StrategyKind | str, label: str | None = None):
        self.kind = _kind(kind)
        self.label = label or str(self.kind)
        self.matrix = DEFAULT_MATRIX
        self.state = StrategyState()
        self._seen = 0

    def reset(self, matrix: PayoffMatrix = DEFAULT_MATRIX, n_rounds: int = 0) -> None:
        self.matrix = matrix
        self.state = StrategyState()
        self._seen = 0

    def decide(self, history: Sequence[RoundRecord], rng: np.random.Generator | None = None) -> Action:
        for rec in history[self._seen:]:
            self.state.update(rec)
        self._seen = len(history)
        s, name = self.state, self.kind.name
        if name in ("RND", "URND"):
            return C if rng.random() < self.kind.p else D
        if name == "AC":
            return C
        if name == "AD":
            return D
        if s.last_own_action is None:
            return D if name == "STFT" else C
        if name in ("TFT", "STFT"):
            return s.last_opponent_action
        if name == "GRIM":
            return D if s.opponent_defected_ever else C
        if s.last_own_payoff in (self.matrix.R, self.matrix.T):
            return s.last_own_action
        return D if s.last_own_action is C else C

    def __repr__(self) -> str:
        return f"StrategyAgent({str(self.kind)!r})"


def prescribe(kind: StrategyKind | str, trace: GameTrace, player: str = "A",
              m: PayoffMatrix = DEFAULT_MATRIX) -> list[Action]:
    """What a deterministic strategy would play at each round given the observed history.

    Prescriptions condition on the player's *observed* own actions, not on the
    strategy's counterfactual play.
    """
    kind = _kind(kind)
    if not kind.deterministic:
        raise ValueError(f"prescribe() needs a deterministic strategy, got {kind}")
    view = trace.view(player)
    agent = StrategyAgent(kind)
    agent.reset(m)
    return [agent.decide(view[:t]) for t in range(len(view))]


class TremblingAgent(StrategyAgent):
    """A strategy agent that flips its prescribed action with probability ``epsilon``.

    Used to generate synthetic histories with implementation noise.
    """

    def __init__(self, kind: StrategyKind | str, epsilon: float, label: str | None = None):
        super().__init__(kind, label)
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        self.epsilon = epsilon
        if label is None:
            self.label = f"{self.kind}~{epsilon:g}"

    def decide(self, history, rng=None):
        action = super().decide(history, rng)
        if rng.random() < self.epsilon:
            return D if action is C else C
        return action
