"""Prisoner's Dilemma primitives, the iterated game loop and cooperation statistics."""

from __future__ import annotations

import enum
import logging
import math
import zlib
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class Action(str, enum.Enum):
    COOPERATE = "Cooperate"
    DEFECT = "Defect"

    def __str__(self) -> str:
        return self.value

    @property
    def short(self) -> str:
        return self.value[0]

    @classmethod
    def parse(cls, text: str) -> "Action":
        key = text.strip().lower()
        if key in ("cooperate", "c"):
            return cls.COOPERATE
        if key in ("defect", "d"):
            return cls.DEFECT
        raise ValueError(f"not an action: {text!r}")


C = Action.COOPERATE
D = Action.DEFECT


def actions_from_string(s: str) -> list[Action]:
    """``"CCD"`` -> ``[C, C, D]``; convenient in tests and scripts."""
    return [Action.parse(ch) for ch in s if not ch.isspace()]


@dataclass(frozen=True)
class PayoffMatrix:
    T: int = 5
    R: int = 3
    P: int = 1
    S: int = 0

    def __post_init__(self):
        if not (self.T > self.R > self.P > self.S):
            raise ValueError(f"payoffs must satisfy T > R > P > S, got {self}")

    @property
    def lowest(self) -> int:
        return self.S

    @property
    def highest(self) -> int:
        return self.T


DEFAULT_MATRIX = PayoffMatrix()


def payoff(a: Action, b: Action, m: PayoffMatrix = DEFAULT_MATRIX) -> tuple[int, int]:
    if a is C and b is C:
        return m.R, m.R
    if a is D and b is D:
        return m.P, m.P
    if a is D:
        return m.T, m.S
    return m.S, m.T


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    action_a: Action
    action_b: Action
    payoff_a: int
    payoff_b: int

    def swapped(self) -> "RoundRecord":
        """The same round seen from player B's seat."""
        return RoundRecord(self.round_index, self.action_b, self.action_a, self.payoff_b, self.payoff_a)


@dataclass
class GameTrace:
    rounds: list[RoundRecord]
    n_rounds: int
    alpha: float | None = None
    seed: int | None = None
    agent_labels: tuple[str, str] = ("A", "B")
    failed: bool = False
    # diagnostic for failed games; not persisted
    failure: str | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.rounds)

    def actions(self, player: str = "A") -> list[Action]:
        if player == "A":
            return [r.action_a for r in self.rounds]
        if player == "B":
            return [r.action_b for r in self.rounds]
        raise ValueError(f"player must be 'A' or 'B', got {player!r}")

    def totals(self) -> tuple[int, int]:
        return sum(r.payoff_a for r in self.rounds), sum(r.payoff_b for r in self.rounds)

    def view(self, player: str = "A") -> list[RoundRecord]:
        """Rounds oriented so that ``player`` sits in seat A."""
        if player == "A":
            return list(self.rounds)
        if player == "B":
            return [r.swapped() for r in self.rounds]
        raise ValueError(f"player must be 'A' or 'B', got {player!r}")

    def validate(self) -> None:
        for i, r in enumerate(self.rounds, start=1):
            if r.round_index != i:
                raise ValueError(f"round indices not contiguous at position {i}: {r.round_index}")
        if not self.failed and len(self.rounds) != self.n_rounds:
            raise ValueError(f"completed trace has {len(self.rounds)} rounds, expected {self.n_rounds}")
        # the matrix is not stored, but the payoffs must come from a single symmetric one
        seen: dict[tuple[Action, Action], int] = {}
        for r in self.rounds:
            for key, pts in (((r.action_a, r.action_b), r.payoff_a), ((r.action_b, r.action_a), r.payoff_b)):
                if seen.setdefault(key, pts) != pts:
                    raise ValueError(f"round {r.round_index}: payoff {pts} for {key[0].value}/{key[1].value} "
                                     f"contradicts earlier rounds")

    @classmethod
    def from_actions(
        cls,
        actions_a: Sequence[Action] | str,
        actions_b: Sequence[Action] | str,
        m: PayoffMatrix = DEFAULT_MATRIX,
        **kwargs,
    ) -> "GameTrace":
        if isinstance(actions_a, str):
            actions_a = actions_from_string(actions_a)
        if isinstance(actions_b, str):
            actions_b = actions_from_string(actions_b)
        if len(actions_a) != len(actions_b):
            raise ValueError("action sequences differ in length")
        rounds = []
        for i, (a, b) in enumerate(zip(actions_a, actions_b), start=1):
            pa, pb = payoff(a, b, m)
            rounds.append(RoundRecord(i, a, b, pa, pb))
        return cls(rounds=rounds, n_rounds=len(rounds), **kwargs)


class AgentFailure(RuntimeError):
    """An agent could not produce an action (e.g. a remote backend gave up)."""


class Agent(Protocol):
    label: str

    def reset(self, matrix: PayoffMatrix, n_rounds: int) -> None: ...

    def decide(self, history: Sequence[RoundRecord], rng: np.random.Generator) -> Action: ...


def derive_seed(master_seed: int, cell_id: str, game_index: int) -> int:
    """Seed of game ``game_index`` in a cell; independent of how many games the cell holds."""
    ss = np.random.SeedSequence([int(master_seed), zlib.crc32(cell_id.encode()), int(game_index)])
    return int(ss.generate_state(1, np.uint64)[0]) & (2**63 - 1)


def agent_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent streams for the two seats, both derived from the game seed."""
    ss_a, ss_b = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(ss_a), np.random.default_rng(ss_b)


def play_game(
    agent_a: Agent,
    agent_b: Agent,
    n_rounds: int = 100,
    m: PayoffMatrix = DEFAULT_MATRIX,
    seed: int = 0,
    alpha: float | None = None,
) -> GameTrace:
    """Play ``n_rounds`` of simultaneous-move IPD.

    Each agent sees the history up to the previous round, oriented so that it
    occupies seat A. If an agent raises :class:`AgentFailure` the game stops and
    the returned trace is marked ``failed`` with a diagnostic in ``trace.failure``.
    """
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    rng_a, rng_b = agent_rngs(seed)
    agent_a.reset(m, n_rounds)
    agent_b.reset(m, n_rounds)
    trace = GameTrace(
        rounds=[], n_rounds=n_rounds, alpha=alpha, seed=seed,
        agent_labels=(agent_a.label, agent_b.label),
    )
    view_a: list[RoundRecord] = []
    view_b: list[RoundRecord] = []
    for i in range(1, n_rounds + 1):
        decisions = []
        for seat, agent, view, rng in (("A", agent_a, view_a, rng_a), ("B", agent_b, view_b, rng_b)):
            try:
                decisions.append(agent.decide(tuple(view), rng))
            except AgentFailure as exc:
                trace.failed = True
                trace.failure = f"round {i}, agent {seat} ({agent.label}): {exc}"
                logger.warning("game aborted: %s", trace.failure)
                return trace
        a, b = decisions
        pa, pb = payoff(a, b, m)
        rec = RoundRecord(i, a, b, pa, pb)
        trace.rounds.append(rec)
        view_a.append(rec)
        view_b.append(rec.swapped())
    return trace


# -- statistics ---------------------------------------------------------------

@dataclass(frozen=True)
class CoopCurve:
    per_round: list[tuple[int, float, float, float]]
    overall_mean: float
    overall_ci: tuple[float, float]
    n_games: int = 0

    @property
    def means(self) -> np.ndarray:
        return np.array([row[1] for row in self.per_round])


def ci95(samples: Sequence[float], proportion: bool = False) -> tuple[float, float, float]:
    """Normal-approximation 95% interval ``mean ± 1.96 s/sqrt(n)``.

    ``proportion=True`` clamps the bounds to [0, 1].
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("ci95 needs at least 2 samples")
    mean = float(x.mean())
    half = 1.96 * float(x.std(ddof=1)) / math.sqrt(x.size)
    low, high = mean - half, mean + half
    if proportion:
        low, high = max(low, 0.0), min(high, 1.0)
    return mean, low, high


def bootstrap_ci95(samples: Sequence[float], n_resamples: int = 2000, seed: int = 0,
                   proportion: bool = False) -> tuple[float, float, float]:
    """Percentile bootstrap alternative to :func:`ci95`."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("bootstrap_ci95 needs at least 2 samples")
    rng = np.random.default_rng(seed)
    means = x[rng.integers(0, x.size, size=(n_resamples, x.size))].mean(axis=1)
    low, high = np.percentile(means, [2.5, 97.5])
    mean = float(x.mean())
    low, high = min(float(low), mean), max(float(high), mean)
    if proportion:
        low, high = max(low, 0.0), min(high, 1.0)
    return mean, low, high


def _interval(samples, method: str, proportion: bool):
    if len(samples) < 2:
        m = float(np.mean(samples))
        return m, m, m
    if method == "bootstrap":
        return bootstrap_ci95(samples, proportion=proportion)
    if method != "normal":
        raise ValueError(f"unknown CI method {method!r}")
    return ci95(samples, proportion=proportion)


def coop_matrix(traces: Sequence[GameTrace], player: str = "A") -> np.ndarray:
    """k x N array of cooperation indicators, one row per completed game."""
    done = [t for t in traces if not t.failed]
    if not done:
        raise ValueError("no completed traces")
    n = done[0].n_rounds
    if any(t.n_rounds != n for t in done):
        raise ValueError("traces do not share n_rounds")
    return np.array([[act is C for act in t.actions(player)] for t in done], dtype=float)


def coop_prob_per_round(traces: Sequence[GameTrace], player: str = "A",
                        ci_method: str = "normal") -> CoopCurve:
    """Per-round cooperation frequency across games and its average over rounds.

    Failed traces are skipped. Per-round intervals treat the k games as samples;
    the overall interval uses per-game cooperation rates.
    """
    if not traces:
        raise ValueError("empty trace list")
    x = coop_matrix(traces, player)
    k, n = x.shape
    per_round = []
    for i in range(n):
        mean, low, high = _interval(x[:, i], ci_method, proportion=True)
        per_round.append((i + 1, float(x[:, i].mean()), low, high))
    per_round_means = x.mean(axis=0)
    overall = float(per_round_means.mean())
    _, low, high = _interval(x.mean(axis=1), ci_method, proportion=True)
    return CoopCurve(per_round, overall, (min(low, overall), max(high, overall)), n_games=k)


def steady_state(curve: CoopCurve, tail: int = 10) -> float:
    if tail > len(curve.per_round):
        raise ValueError("tail longer than the curve")
    return float(np.mean([row[1] for row in curve.per_round[-tail:]]))
