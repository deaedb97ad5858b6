"""Iterated Prisoner's Dilemma laboratory for auditing LLM agents.

Plays IPD games between hard-coded strategies, scripted replays and remote
chat-completion models; checks prompt comprehension with meta-questions; and
profiles play with cooperation curves, behavioral dimensions and SFEM.
"""

__version__ = "0.1.0"

from .game import (  # noqa: E402
    C, D, DEFAULT_MATRIX, Action, AgentFailure, CoopCurve, GameTrace, PayoffMatrix, RoundRecord,
    ci95, coop_prob_per_round, derive_seed, payoff, play_game, steady_state,
)
from .strategies import StrategyAgent, StrategyKind, TremblingAgent, next_action, prescribe  # noqa: E402
from .metrics import aggregate_profile, profile  # noqa: E402
from .sfem import SfemConfig, SfemFit, fit as sfem_fit, per_strategy_score  # noqa: E402
from .traces import read_jsonl, write_jsonl  # noqa: E402
