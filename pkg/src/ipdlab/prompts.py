"""Prompt text for LLM players: system, contextual and instructing parts.

With ``fmt="paper_llama_markers"`` the three parts concatenate into the
Llama-2 chat layout (``<s> [INST]``, ``<<SYS>>`` ... ``[/INST]``). With
``fmt="plain_messages"`` the markers are dropped and every sentence is kept.
The LLM always reads the game from seat A.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .game import C, D, DEFAULT_MATRIX, PayoffMatrix, RoundRecord, payoff

FORMATS = ("paper_llama_markers", "plain_messages")
VARIANTS = ("plain", "cot_kojima", "cot_zhou")

_COT_SUFFIX = {
    "plain": None,
    "cot_kojima": "Let’s think step by step",
    "cot_zhou": "Let's work this out in a step-by-step way to be sure we have the right answer",
}

OBJECTIVE = "Remember that a player's objective is to get the highest possible number of points in the long run."


def _check_fmt(fmt: str) -> bool:
    if fmt not in FORMATS:
        raise ValueError(f"unknown chat format {fmt!r}; expected one of {FORMATS}")
    return fmt == "paper_llama_markers"


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    contextual_text: str
    instructing_text: str

    @property
    def user_text(self) -> str:
        return self.contextual_text + self.instructing_text

    def full_text(self) -> str:
        return self.system_text + self.contextual_text + self.instructing_text

    def messages(self) -> list[dict[str, str]]:
        return [
            {"role": "system", "content": self.system_text},
            {"role": "user", "content": self.user_text},
        ]


def _payoff_line(a, b, m: PayoffMatrix) -> str:
    pa, pb = payoff(a, b, m)
    return f'If A plays "{a}" and B plays "{b}", A collects {pa} points and B collects {pb} points.'


def build_system_prompt(m: PayoffMatrix = DEFAULT_MATRIX, n_rounds: int = 100,
                        fmt: str = "paper_llama_markers") -> str:
    markers = _check_fmt(fmt)
    lines = []
    if markers:
        lines += ["<s> [INST]", "<<SYS>>", ""]
    lines += [
        "Context: Player A and player B are playing a multi-round game.",
        'At each turn player A and player B simultaneously perform one of the following actions: '
        '{"Cooperate", "Defect"}',
        "",
        "The payoffs for each combination of chosen actions are the following:",
        _payoff_line(D, D, m),
        _payoff_line(D, C, m),
        _payoff_line(C, D, m),
        _payoff_line(C, C, m),
        "",
        f"They will play a total of {n_rounds} rounds of this game.",
        "",
        OBJECTIVE,
        "",
    ]
    if markers:
        lines.append("<<SYS>>")
    return "\n".join(lines) + "\n"


def window_slice(prefix: Sequence[RoundRecord], window: int | str = "full") -> list[RoundRecord]:
    """The rounds visible to the player under a memory window (``"full"`` keeps all)."""
    if window == "full" or window is None:
        return list(prefix)
    if not isinstance(window, int) or window < 1:
        raise ValueError(f"window must be a positive integer or 'full', got {window!r}")
    return list(prefix[-window:]) if prefix else []


def window_totals(rounds: Sequence[RoundRecord]) -> dict[str, int]:
    """Action counts and points over the given rounds (the window, not the whole game)."""
    return {
        "A_Cooperate": sum(r.action_a is C for r in rounds),
        "A_Defect": sum(r.action_a is D for r in rounds),
        "B_Cooperate": sum(r.action_b is C for r in rounds),
        "B_Defect": sum(r.action_b is D for r in rounds),
        "A_points": sum(r.payoff_a for r in rounds),
        "B_points": sum(r.payoff_b for r in rounds),
    }


def round_line(r: RoundRecord) -> str:
    return (f'Round {r.round_index}: A played "{r.action_a}" and B played "{r.action_b}" '
            f"A collected {r.payoff_a} points and B collected {r.payoff_b} points.")


def build_contextual_prompt(prefix: Sequence[RoundRecord], window: int | str = 10,
                            current_round: int | None = None) -> str:
    if current_round is None:
        current_round = len(prefix) + 1
    if current_round != len(prefix) + 1:
        raise ValueError("current_round must equal len(prefix) + 1")
    shown = window_slice(prefix, window)
    tot = window_totals(shown)
    lines = ["", f"The history of the game in the last {len(shown)} rounds is the following:", ""]
    lines += [round_line(r) for r in shown]
    lines += [
        "",
        f'In total, A chose "Cooperate" {tot["A_Cooperate"]} times and chose "Defect" {tot["A_Defect"]} times, '
        f'B chose "Cooperate" {tot["B_Cooperate"]} times and chose "Defect" {tot["B_Defect"]} times.',
        f"In total, A collected {tot['A_points']} points and B collected {tot['B_points']} points.",
        "",
        f"Current round: {current_round}.",
        "",
    ]
    return "\n".join(lines) + "\n"


def build_instructing_prompt(variant: str = "plain", fmt: str = "paper_llama_markers") -> str:
    if variant not in VARIANTS:
        raise ValueError(f"unknown instructing variant {variant!r}; expected one of {VARIANTS}")
    end = "[/INST]" if _check_fmt(fmt) else ""
    fmt_lines = [
        "Remember to use only the following JSON format:",
        '{"action": <ACTION_of_A>, "reason": <YOUR_REASON>}',
    ]
    closing = f"Remember to answer using the right format.{end}"
    ask = "Answer saying which action player A should play."
    suffix = _COT_SUFFIX[variant]
    if suffix is None:
        lines = ["", *fmt_lines, "", ask, "", closing, ""]
    else:
        lines = ["", *fmt_lines, ask, closing, "", suffix, ""]
    return "\n".join(lines) + "\n"


def build_question_prompt(question: str, fmt: str = "paper_llama_markers") -> str:
    """Instructing part used during comprehension runs, in place of the action request."""
    end = "[/INST]" if _check_fmt(fmt) else ""
    lines = [
        "",
        "Remember to use only the following JSON format:",
        '{"answer": <YOUR_ANSWER>}',
        "",
        question,
        "",
        f"Remember to answer using the right format.{end}",
        "",
    ]
    return "\n".join(lines) + "\n"


def build_prompt(prefix: Sequence[RoundRecord], m: PayoffMatrix = DEFAULT_MATRIX, n_rounds: int = 100,
                 window: int | str = 10, variant: str = "plain",
                 fmt: str = "paper_llama_markers") -> PromptBundle:
    return PromptBundle(
        build_system_prompt(m, n_rounds, fmt),
        build_contextual_prompt(prefix, window),
        build_instructing_prompt(variant, fmt),
    )
