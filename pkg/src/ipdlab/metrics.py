"""Behavioral dimensions of a player's IPD history.

Conventions, for player X facing opponent Y (rounds numbered from 1):

* an *uncalled defection* by X at round t: X_t = D and (t = 1 or Y_{t-1} = C);
* an *occasion to provoke* for X at round t: t = 1 or Y_{t-1} = C.

A dimension whose denominator is zero is undefined and reported as ``None``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .game import C, D, GameTrace, ci95

DIMENSIONS = ("nice", "forgiving", "retaliatory", "troublemaking", "emulative")


def _seqs(trace: GameTrace, player: str):
    other = "B" if player == "A" else "A"
    return trace.actions(player), trace.actions(other)


def _first_defection(actions) -> float:
    for t, a in enumerate(actions, start=1):
        if a is D:
            return t
    return math.inf


def niceness(trace: GameTrace, player: str = "A") -> int:
    """1 if the player never defects first; simultaneous first defections score 0."""
    x, y = _seqs(trace, player)
    fx = _first_defection(x)
    if fx == math.inf:
        return 1
    return int(fx > _first_defection(y))


def forgiveness(trace: GameTrace, player: str = "A") -> float | None:
    x, y = _seqs(trace, player)
    n = len(x)
    # 0-based: opponent defection at t (t < n-1), forgiven if x[t+1] == C
    opp_defections = sum(1 for t in range(n - 1) if y[t] is D)
    forgiven = sum(1 for t in range(n - 1) if y[t] is D and x[t + 1] is C)
    penalties = 0
    defected_before = False  # y defected strictly before round t-1
    for t in range(1, n):
        if y[t - 1] is C and x[t - 1] is D and x[t] is D and defected_before:
            penalties += 1
        defected_before |= y[t - 1] is D
    denom = opp_defections + penalties
    return forgiven / denom if denom else None


def retaliation(trace: GameTrace, player: str = "A") -> float | None:
    x, y = _seqs(trace, player)
    n = len(x)
    provocations = reactions = 0
    for t in range(n - 1):
        if y[t] is D and (t == 0 or x[t - 1] is C):
            provocations += 1
            reactions += x[t + 1] is D
    return reactions / provocations if provocations else None


def troublemaking(trace: GameTrace, player: str = "A") -> float | None:
    x, y = _seqs(trace, player)
    occasions = uncalled = 0
    for t in range(len(x)):
        if t == 0 or y[t - 1] is C:
            occasions += 1
            uncalled += x[t] is D
    return uncalled / occasions if occasions else None


def emulation(trace: GameTrace, player: str = "A") -> float:
    x, y = _seqs(trace, player)
    n = len(x)
    if n < 2:
        raise ValueError("emulation needs at least 2 rounds")
    return sum(x[t] is y[t - 1] for t in range(1, n)) / (n - 1)


_OPS = {
    "nice": niceness,
    "forgiving": forgiveness,
    "retaliatory": retaliation,
    "troublemaking": troublemaking,
    "emulative": emulation,
}


def profile(trace: GameTrace, player: str = "A") -> dict[str, float | None]:
    """The five-dimensional behavioral vector of one game."""
    return {name: _OPS[name](trace, player) for name in DIMENSIONS}


@dataclass(frozen=True)
class DimensionSummary:
    mean: float | None
    ci_low: float | None
    ci_high: float | None
    n_defined: int
    n_games: int

    @property
    def n_undefined(self) -> int:
        return self.n_games - self.n_defined

    @property
    def defined(self) -> bool:
        return self.n_defined > 0


@dataclass(frozen=True)
class BehavioralProfile:
    dimensions: dict[str, DimensionSummary] = field(default_factory=dict)

    def __getitem__(self, name: str) -> DimensionSummary:
        return self.dimensions[name]

    def means(self) -> dict[str, float | None]:
        return {k: v.mean for k, v in self.dimensions.items()}


def aggregate_profile(traces: Sequence[GameTrace], player: str = "A") -> BehavioralProfile:
    """Mean and 95% interval of each dimension over the games where it is defined."""
    done = [t for t in traces if not t.failed]
    if not done:
        raise ValueError("aggregate_profile needs at least one completed trace")
    per_game = [profile(t, player) for t in done]
    out = {}
    for name in DIMENSIONS:
        vals = [float(p[name]) for p in per_game if p[name] is not None]
        if not vals:
            out[name] = DimensionSummary(None, None, None, 0, len(done))
            continue
        if len(vals) >= 2:
            mean, low, high = ci95(vals, proportion=True)
        else:
            mean = low = high = vals[0]
        out[name] = DimensionSummary(mean, low, high, len(vals), len(done))
    return BehavioralProfile(out)
