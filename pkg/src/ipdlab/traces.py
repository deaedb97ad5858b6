"""JSONL persistence for game traces, one game per line."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .game import SCHEMA_VERSION, Action, GameTrace, RoundRecord


class TraceFormatError(ValueError):
    pass


def trace_to_dict(trace: GameTrace) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "agent_labels": list(trace.agent_labels),
        "alpha": trace.alpha,
        "seed": trace.seed,
        "n_rounds": trace.n_rounds,
        "rounds": [
            {"i": r.round_index, "a": r.action_a.value, "b": r.action_b.value,
             "pa": r.payoff_a, "pb": r.payoff_b}
            for r in trace.rounds
        ],
        "failed": trace.failed,
    }


_ACTIONS = {a.value: a for a in Action}


def trace_from_dict(d: dict) -> GameTrace:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise TraceFormatError(
            f"schema_version {d.get('schema_version')!r} not supported (expected {SCHEMA_VERSION})")
    rounds = [
        RoundRecord(r["i"], _ACTIONS[r["a"]], _ACTIONS[r["b"]], int(r["pa"]), int(r["pb"]))
        for r in d["rounds"]
    ]
    trace = GameTrace(
        rounds=rounds, n_rounds=int(d["n_rounds"]), alpha=d["alpha"], seed=d["seed"],
        agent_labels=tuple(d["agent_labels"]), failed=bool(d["failed"]),
    )
    trace.validate()
    return trace


def dumps(trace: GameTrace) -> str:
    return json.dumps(trace_to_dict(trace), separators=(",", ":"))


def write_jsonl(traces: Iterable[GameTrace], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for t in traces:
            fh.write(dumps(t) + "\n")
    return path


def iter_jsonl(path: str | Path) -> Iterator[GameTrace]:
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            try:
                yield trace_from_dict(d)
            except TraceFormatError as exc:
                raise TraceFormatError(f"{path}: line {lineno}: {exc}") from exc
            except (KeyError, TypeError, ValueError) as exc:
                raise TraceFormatError(f"{path}: line {lineno}: malformed trace ({exc!r})") from exc


def read_jsonl(path: str | Path) -> list[GameTrace]:
    return list(iter_jsonl(path))
