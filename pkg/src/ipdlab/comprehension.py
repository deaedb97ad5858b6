"""Meta-prompting: checks that an agent can read the rules, history and totals in its prompt.

At every round of a game the eight question templates are instantiated for
every combination of their parameters, posed as separate requests on the same
game state, and graded against ground truth computed from the payoff matrix
and the rounds visible in the memory window.
"""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from . import prompts
from .agents import ParseFailure, find_json_object
from .game import (C, D, DEFAULT_MATRIX, Action, AgentFailure, GameTrace, PayoffMatrix,
                   RoundRecord, ci95, derive_seed, payoff, play_game)
from .strategies import StrategyAgent

logger = logging.getLogger(__name__)

PLAYERS = ("A", "B")
ACTIONS = (C, D)


@dataclass(frozen=True)
class QuestionTemplate:
    name: str
    category: str
    text: str
    parameter_space: str


TEMPLATES = (
    QuestionTemplate("min_max", "Rules", "What is the {extreme} payoff player {X} can get in a single round?",
                     "X in {A, B}; extreme in {lowest, highest}"),
    QuestionTemplate("actions", "Rules", "Which actions is player {X} allowed to play?", "X in {A, B}"),
    QuestionTemplate("payoff", "Rules",
                     'Which is player {X}\'s payoff in a single round if {X} plays "{p}" and {Y} plays "{q}"?',
                     "X in {A, B}; p, q in {Cooperate, Defect}"),
    QuestionTemplate("round", "Time", "Which is the current round of the game?", "none"),
    QuestionTemplate("action_i", "Time", "Which action did player {X} play in round {i}?",
                     "X in {A, B}; i over the rounds visible in the window"),
    QuestionTemplate("points_i", "Time", "How many points did player {X} collect in round {i}?",
                     "X in {A, B}; i over the rounds visible in the window"),
    QuestionTemplate("n_actions", "State", 'How many times did player {X} choose "{p}"?',
                     "X in {A, B}; p in {Cooperate, Defect}"),
    QuestionTemplate("n_points", "State", "What is player {X}'s current total payoff?", "X in {A, B}"),
)
TEMPLATE_BY_NAME = {t.name: t for t in TEMPLATES}


@dataclass(frozen=True)
class QuestionInstance:
    template: QuestionTemplate
    rendered_text: str
    ground_truth: int | str | tuple[str, ...]
    params: tuple = ()


def _other(x: str) -> str:
    return "B" if x == "A" else "A"


def instantiate(templates: Sequence[QuestionTemplate] | None, m: PayoffMatrix, prefix: Sequence[RoundRecord],
                window: int | str, current_round: int) -> list[QuestionInstance]:
    """All question instances for one game state."""
    if current_round < 1:
        raise ValueError("current_round must be >= 1")
    templates = TEMPLATES if templates is None else templates
    shown = prompts.window_slice(prefix, window)
    tot = prompts.window_totals(shown)
    out: list[QuestionInstance] = []
    for tpl in templates:
        t = tpl.text
        if tpl.name == "min_max":
            for x in PLAYERS:
                for extreme, value in (("lowest", m.lowest), ("highest", m.highest)):
                    out.append(QuestionInstance(tpl, t.format(extreme=extreme, X=x), value, (x, extreme)))
        elif tpl.name == "actions":
            for x in PLAYERS:
                out.append(QuestionInstance(tpl, t.format(X=x), tuple(a.value for a in ACTIONS), (x,)))
        elif tpl.name == "payoff":
            for x in PLAYERS:
                for p in ACTIONS:
                    for q in ACTIONS:
                        # p is X's action, q is Y's
                        a, b = (p, q) if x == "A" else (q, p)
                        gt = payoff(a, b, m)[0 if x == "A" else 1]
                        out.append(QuestionInstance(tpl, t.format(X=x, Y=_other(x), p=p, q=q), gt, (x, p.value, q.value)))
        elif tpl.name == "round":
            out.append(QuestionInstance(tpl, t, current_round))
        elif tpl.name == "action_i":
            for x in PLAYERS:
                for r in shown:
                    act = r.action_a if x == "A" else r.action_b
                    out.append(QuestionInstance(tpl, t.format(X=x, i=r.round_index), act.value, (x, r.round_index)))
        elif tpl.name == "points_i":
            for x in PLAYERS:
                for r in shown:
                    pts = r.payoff_a if x == "A" else r.payoff_b
                    out.append(QuestionInstance(tpl, t.format(X=x, i=r.round_index), pts, (x, r.round_index)))
        elif tpl.name == "n_actions":
            for x in PLAYERS:
                for p in ACTIONS:
                    out.append(QuestionInstance(tpl, t.format(X=x, p=p), tot[f"{x}_{p.value}"], (x, p.value)))
        elif tpl.name == "n_points":
            for x in PLAYERS:
                out.append(QuestionInstance(tpl, t.format(X=x), tot[f"{x}_points"], (x,)))
        else:
            raise ValueError(f"unknown template {tpl.name!r}")
    return out


class Grade(enum.Enum):
    CORRECT = "correct"
    WRONG = "wrong"
    UNPARSEABLE = "unparseable"


_INT = re.compile(r"-?\d+")
_ACTION_WORD = re.compile(r"cooperate|defect", re.IGNORECASE)


def grade_detail(instance: QuestionInstance, reply_text: str) -> Grade:
    try:
        answer = find_json_object(reply_text, "answer")["answer"]
    except ParseFailure:
        return Grade.UNPARSEABLE
    gt = instance.ground_truth
    text = answer if isinstance(answer, str) else json.dumps(answer)
    if isinstance(gt, int):
        if isinstance(answer, bool):
            return Grade.UNPARSEABLE
        match = _INT.search(text)
        if match is None:
            return Grade.UNPARSEABLE
        return Grade.CORRECT if int(match.group()) == gt else Grade.WRONG
    words = {w.lower() for w in _ACTION_WORD.findall(text)}
    if not words:
        return Grade.UNPARSEABLE
    expected = {gt.lower()} if isinstance(gt, str) else {g.lower() for g in gt}
    return Grade.CORRECT if words == expected else Grade.WRONG


def grade(instance: QuestionInstance, reply_text: str) -> bool:
    return grade_detail(instance, reply_text) is Grade.CORRECT


# -- answering agents ---------------------------------------------------------

class Answerer(Protocol):
    def ask(self, bundle: prompts.PromptBundle) -> str: ...


_PAYOFF_LINE = re.compile(r'If A plays "(\w+)" and B plays "(\w+)", A collects (-?\d+) points and B collects (-?\d+) points\.')
_ROUND_LINE = re.compile(r'Round (\d+): A played "(\w+)" and B played "(\w+)" A collected (-?\d+) points and B collected (-?\d+) points\.')
_COUNTS_LINE = re.compile(r'In total, A chose "Cooperate" (\d+) times and chose "Defect" (\d+) times, '
                          r'B chose "Cooperate" (\d+) times and chose "Defect" (\d+) times\.')
_POINTS_LINE = re.compile(r"In total, A collected (-?\d+) points and B collected (-?\d+) points\.")
_CURRENT = re.compile(r"Current round: (\d+)\.")


class OracleAgent:
    """Answers comprehension questions by reading its own prompt, never the game object.

    It plays like RND when asked for an action.
    """

    label = "oracle"

    def reset(self, matrix: PayoffMatrix = DEFAULT_MATRIX, n_rounds: int = 0) -> None:
        pass

    def decide(self, history: Sequence[RoundRecord], rng: np.random.Generator) -> Action:
        return C if rng.random() < 0.5 else D

    def ask(self, bundle: prompts.PromptBundle) -> str:
        return json.dumps({"answer": self._answer(bundle)})

    def _answer(self, bundle: prompts.PromptBundle):
        table = {}
        for a, b, pa, pb in _PAYOFF_LINE.findall(bundle.system_text):
            table[(a, b)] = (int(pa), int(pb))
        ctx = bundle.contextual_text
        history = {int(i): (a, b, int(pa), int(pb)) for i, a, b, pa, pb in _ROUND_LINE.findall(ctx)}
        q = bundle.instructing_text
        if m := re.search(r"What is the (lowest|highest) payoff player ([AB])", q):
            idx = 0 if m.group(2) == "A" else 1
            vals = [v[idx] for v in table.values()]
            return min(vals) if m.group(1) == "lowest" else max(vals)
        if re.search(r"Which actions is player [AB] allowed", q):
            found = re.search(r"following actions: \{(.*)\}", bundle.system_text).group(1)
            return [w.strip().strip('"') for w in found.split(",")]
        if m := re.search(r'Which is player ([AB])\'s payoff in a single round if [AB] plays "(\w+)" and [AB] plays "(\w+)"', q):
            x, p, qq = m.groups()
            key = (p, qq) if x == "A" else (qq, p)
            return table[key][0 if x == "A" else 1]
        if "Which is the current round" in q:
            return int(_CURRENT.search(ctx).group(1))
        if m := re.search(r"Which action did player ([AB]) play in round (\d+)", q):
            rec = history[int(m.group(2))]
            return rec[0] if m.group(1) == "A" else rec[1]
        if m := re.search(r"How many points did player ([AB]) collect in round (\d+)", q):
            rec = history[int(m.group(2))]
            return rec[2] if m.group(1) == "A" else rec[3]
        if m := re.search(r'How many times did player ([AB]) choose "(\w+)"', q):
            counts = [int(v) for v in _COUNTS_LINE.search(ctx).groups()]
            offset = 0 if m.group(1) == "A" else 2
            return counts[offset + (0 if m.group(2) == "Cooperate" else 1)]
        if m := re.search(r"What is player ([AB])'s current total payoff", q):
            pts = _POINTS_LINE.search(ctx).groups()
            return int(pts[0 if m.group(1) == "A" else 1])
        raise ValueError(f"oracle cannot answer: {q!r}")


class ConstantAnswerer:
    """Gives the same answer to every question (or to those matching ``only``)."""

    def __init__(self, answer, only: Callable[[str], bool] | None = None, fallback=None):
        self.answer = answer
        self.only = only
        self.fallback = fallback

    def ask(self, bundle: prompts.PromptBundle) -> str:
        if self.only is None or self.only(bundle.instructing_text):
            return json.dumps({"answer": self.answer})
        return json.dumps({"answer": self.fallback})


# -- runs -----------------------------------------------------------------------

@dataclass
class TemplateScore:
    n_asked: int = 0
    n_correct: int = 0
    n_unparseable: int = 0
    accuracy: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None


@dataclass
class GradeReport:
    per_template: dict[str, TemplateScore]
    per_game_accuracy: dict[str, list[float]] = field(default_factory=dict)
    per_round_series: dict[str, list[tuple[int, int, int]]] = field(default_factory=dict)
    n_games: int = 0
    partial: bool = False
    failure: str | None = None

    def accuracy(self, name: str) -> float | None:
        return self.per_template[name].accuracy


class _Tally:
    def __init__(self, names):
        self.names = list(names)
        self.total = {n: [0, 0, 0] for n in self.names}
        self.games: dict[str, list[tuple[int, int]]] = {n: [] for n in self.names}
        self.rounds: dict[str, dict[int, list[int]]] = {n: {} for n in self.names}
        self._game = None

    def start_game(self):
        self._game = {n: [0, 0] for n in self.names}

    def end_game(self):
        for n, (asked, correct) in self._game.items():
            if asked:
                self.games[n].append((asked, correct))

    def add(self, name, round_index, g: Grade):
        t = self.total[name]
        t[0] += 1
        t[1] += g is Grade.CORRECT
        t[2] += g is Grade.UNPARSEABLE
        self._game[name][0] += 1
        self._game[name][1] += g is Grade.CORRECT
        r = self.rounds[name].setdefault(round_index, [0, 0])
        r[0] += 1
        r[1] += g is Grade.CORRECT

    def report(self, partial=False, failure=None) -> GradeReport:
        per_template, per_game, series = {}, {}, {}
        for n in self.names:
            asked, correct, unparse = self.total[n]
            accs = [c / a for a, c in self.games[n]]
            per_game[n] = accs
            series[n] = [(i, a, c) for i, (a, c) in sorted(self.rounds[n].items())]
            if not asked:
                per_template[n] = TemplateScore()
                continue
            acc = correct / asked
            if len(accs) >= 2:
                _, low, high = ci95(accs, proportion=True)
                low, high = min(low, acc), max(high, acc)
            else:
                low = high = acc
            per_template[n] = TemplateScore(asked, correct, unparse, acc, low, high)
        return GradeReport(per_template, per_game, series, len(next(iter(self.games.values()), [])),
                           partial, failure)


def evaluate_traces(answerer: Answerer, traces: Sequence[GameTrace], window: int | str = 10,
                    m: PayoffMatrix = DEFAULT_MATRIX, templates: Sequence[QuestionTemplate] | None = None,
                    fmt: str = "paper_llama_markers", player: str = "A") -> GradeReport:
    """Pose every question at every round of recorded games.

    The questioned agent reads the game from ``player``'s seat.
    """
    templates = TEMPLATES if templates is None else templates
    tally = _Tally(t.name for t in templates)
    failure = None
    for trace in traces:
        view = trace.view(player)
        system = prompts.build_system_prompt(m, trace.n_rounds, fmt)
        tally.start_game()
        try:
            for r in range(1, len(view) + 1):
                prefix = view[: r - 1]
                contextual = prompts.build_contextual_prompt(prefix, window, r)
                for inst in instantiate(templates, m, prefix, window, r):
                    bundle = prompts.PromptBundle(system, contextual,
                                                  prompts.build_question_prompt(inst.rendered_text, fmt))
                    tally.add(inst.template.name, r, grade_detail(inst, answerer.ask(bundle)))
        except AgentFailure as exc:
            failure = str(exc)
            logger.warning("comprehension run aborted: %s", exc)
            tally.end_game()
            break
        tally.end_game()
    return tally.report(partial=failure is not None, failure=failure)


def run_comprehension(agent, opponent=None, n_games: int = 3, n_rounds: int = 100, window: int | str = 10,
                      m: PayoffMatrix = DEFAULT_MATRIX, seed: int = 0,
                      templates: Sequence[QuestionTemplate] | None = None,
                      fmt: str = "paper_llama_markers") -> tuple[GradeReport, list[GameTrace]]:
    """Play ``n_games`` against RND and question the agent at every round.

    Returns the report and the played traces. A game aborted by an agent
    failure is graded up to where it stopped and the report is flagged partial.
    """
    opponent = opponent or StrategyAgent("RND")
    traces = []
    for g in range(n_games):
        trace = play_game(agent, opponent, n_rounds, m, seed=derive_seed(seed, "comprehension", g))
        traces.append(trace)
        if trace.failed:
            break
    report = evaluate_traces(agent, traces, window, m, templates, fmt)
    if traces and traces[-1].failed:
        report.partial = True
        report.failure = report.failure or traces[-1].failure
    return report, traces
