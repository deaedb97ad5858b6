"""Command-line interface for running games, sweeps and analyses."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .agents import make_agent
from .game import PayoffMatrix, play_game
from .sfem import SfemConfig
from .strategies import StrategyAgent
from .traces import dumps, read_jsonl


def _load_config(path: str | None) -> tuple[dict, str | None]:
    if path is None:
        return {}, None
    text = Path(path).read_text(encoding="utf-8")
    return json.loads(text), text


def _spec(args, experiment: str) -> tuple[ex.ExperimentSpec, str | None]:
    cfg, text = _load_config(args.config)
    cfg["experiment"] = experiment
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.out is not None:
        cfg["output_dir"] = args.out
    if args.workers is not None:
        cfg["workers"] = args.workers
    if getattr(args, "subject", None):
        cfg["subject"] = args.subject
    spec = ex.ExperimentSpec.from_dict(cfg)
    remote = ex._subject_type(spec.subject) == "remote"
    if args.budget is not None:
        if experiment == "comprehension":
            spec.n_games = args.budget
        else:
            spec.k = args.budget
    elif remote:
        raise SystemExit("remote subjects issue paid requests; pass --budget K to set the games per cell")
    return spec, text


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags override its values")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="games played in parallel")
    p.add_argument("--budget", type=int, help="games per cell (required for remote subjects)")
    p.add_argument("--subject", help="subject strategy id (TFT, URND:0.3, ...) or \"oracle\"")


def cmd_play(args) -> int:
    m = PayoffMatrix(*args.payoffs) if args.payoffs else PayoffMatrix()
    a = make_agent(json.loads(args.a) if args.a.startswith("{") else args.a)
    b = StrategyAgent(args.b)
    trace = play_game(a, b, args.rounds, m, seed=args.seed or 0)
    print(dumps(trace))
    pa, pb = trace.totals()
    print(f"# totals A={pa} B={pb}" + (f" FAILED: {trace.failure}" if trace.failed else ""), file=sys.stderr)
    return 1 if trace.failed else 0


def cmd_run(experiment):
    def run(args) -> int:
        spec, text = _spec(args, experiment)
        artifact = ex.RUNNERS[experiment](spec, text)
        for p in artifact.summary_paths:
            print(p)
        return 0
    return run


def _group_by_alpha(traces):
    groups: dict = {}
    for t in traces:
        groups.setdefault(t.alpha, []).append(t)
    return groups


def cmd_sfem(args) -> int:
    cfg = SfemConfig(seed=args.seed or 0)
    rows = []
    for alpha, traces in _group_by_alpha(read_jsonl(args.traces)).items():
        rows += ex.sfem_rows(alpha, traces, args.player, cfg, PayoffMatrix())
    sys.stdout.write(ex._csv_text(ex.SFEM_HEADER, rows))
    return 0


def cmd_metrics(args) -> int:
    rows = []
    for alpha, traces in _group_by_alpha(read_jsonl(args.traces)).items():
        rows += ex.profile_rows(alpha, traces, args.player)
    sys.stdout.write(ex._csv_text(ex.PROFILE_HEADER, rows))
    return 0


def cmd_replay(args) -> int:
    for p in ex.replay(args.path, args.out):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipdlab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("play", help="play one game and print its trace")
    p.add_argument("--a", default="TFT", help="player A: strategy id or JSON agent spec")
    p.add_argument("--b", default="RND", help="player B strategy id")
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--payoffs", type=int, nargs=4, metavar=("T", "R", "P", "S"))
    p.set_defaults(func=cmd_play)

    runs = (
        ("sweep-alpha", "alpha_sweep", "k games against URND(alpha) for each alpha"),
        ("sweep-window", "window_sweep", "k games against AD for each memory window"),
        ("sweep-temperature", "temperature_sweep", "the alpha sweep repeated per temperature"),
        ("comprehend", "comprehension", "question the subject about its prompt at every round"),
    )
    for name, experiment, help_text in runs:
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.set_defaults(func=cmd_run(experiment))

    for name, func in (("sfem", cmd_sfem), ("metrics", cmd_metrics)):
        p = sub.add_parser(name, help=f"{'SFEM fit' if name == 'sfem' else 'behavioral profile'} of a JSONL trace file, "
                                           "grouped by alpha, as CSV on stdout")
        p.add_argument("traces")
        p.add_argument("--player", default="A", choices=("A", "B"))
        p.add_argument("--seed", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("replay", help="recompute summaries of a run directory or JSONL file")
    p.add_argument("path")
    p.add_argument("--out")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
