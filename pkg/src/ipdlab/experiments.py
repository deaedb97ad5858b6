"""Experiment grids: alpha, memory-window and temperature sweeps, comprehension runs, replay.

A run directory looks like::

    manifest.json          config echo, resolved spec, per-cell seeds and failure counts
    traces/<cell>.jsonl    one game per line
    *.csv                  figure-ready summaries

Summaries are always computed from the trace files on disk, by the same code
that :func:`replay` uses, so replaying a run reproduces its CSVs byte for byte.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .agents import AgentConfig, RemoteAgent, ScriptedAgent, make_agent
from .comprehension import OracleAgent, TEMPLATE_BY_NAME, run_comprehension
from .game import (DEFAULT_MATRIX, GameTrace, PayoffMatrix, ci95, coop_prob_per_round, derive_seed,
                   play_game, steady_state)
from .metrics import DIMENSIONS, aggregate_profile
from .sfem import SfemConfig, fit, per_strategy_score
from .strategies import StrategyAgent
from .traces import read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

EXPERIMENTS = ("alpha_sweep", "window_sweep", "temperature_sweep", "comprehension", "replay")
DEFAULT_ALPHAS = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_WINDOWS = (1, 5, 10, 20, "full")
DEFAULT_TEMPERATURES = (0.1, 0.7, 1.0)

# summary file -> what it holds; columns are documented in the README
SUMMARY_CSVS = {
    "comprehension.csv": "accuracy per question template",
    "comprehension_per_round.csv": "accuracy per template and round",
    "window_per_round.csv": "per-round cooperation for each memory window",
    "steady_state.csv": "mean cooperation over the last 10 rounds per window",
    "pcoop.csv": "overall cooperation per alpha",
    "pcoop_per_round.csv": "per-round cooperation per alpha",
    "sfem.csv": "strategy mixture weights and scores per alpha",
    "profile.csv": "behavioral dimensions per alpha",
    "pcoop_temperature.csv": "overall cooperation per temperature and alpha",
    "temperature_correlation.csv": "pairwise Pearson correlation of the temperature curves",
}


@dataclass
class ExperimentSpec:
    experiment: str = "alpha_sweep"
    subject: dict | str = "TFT"
    opponent: str | None = None
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    windows: tuple[int | str, ...] = DEFAULT_WINDOWS
    temperatures: tuple[float, ...] = DEFAULT_TEMPERATURES
    k: int = 100
    n_rounds: int = 100
    master_seed: int = 0
    output_dir: str = "runs/latest"
    workers: int = 1
    payoffs: dict = field(default_factory=lambda: asdict(DEFAULT_MATRIX))
    sfem: dict = field(default_factory=dict)
    window: int | str = 10
    n_games: int = 3
    player: str = "A"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        self.alphas = tuple(float(a) for a in self.alphas)
        self.windows = tuple(self.windows)
        self.temperatures = tuple(float(t) for t in self.temperatures)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.alphas or not self.windows or not self.temperatures:
            raise ValueError("experiment grids must be non-empty")
        if any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ValueError("alphas must lie in [0, 1]")
        for w in self.windows:
            if w != "full" and (not isinstance(w, int) or w < 1):
                raise ValueError(f"bad window {w!r}")

    @property
    def matrix(self) -> PayoffMatrix:
        return PayoffMatrix(**self.payoffs)

    @property
    def sfem_config(self) -> SfemConfig:
        d = dict(self.sfem)
        if "strategy_catalog" in d:
            d["strategy_catalog"] = tuple(d["strategy_catalog"])
        return SfemConfig(**d)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("alphas", "windows", "temperatures"):
            d[key] = list(d[key])
        return d


# -- agents per cell -------------------------------------------------------------

def _subject_type(subject) -> str:
    if isinstance(subject, str):
        return "oracle" if subject == "oracle" else "strategy"
    return subject.get("type", "strategy")


@functools.lru_cache(maxsize=8)
def _recorded_traces(path: str, mtime_ns: int) -> tuple[GameTrace, ...]:
    return tuple(t for t in read_jsonl(path) if not t.failed)


def subject_factory(subject, *, window=None, temperature=None, alpha=None) -> Callable[[int], object]:
    """Returns ``g -> fresh agent`` for game ``g`` of a cell."""
    kind = _subject_type(subject)
    if kind == "replay":
        path = Path(subject["traces"]).resolve()
        source = list(_recorded_traces(str(path), path.stat().st_mtime_ns))
        player = subject.get("player", "A")
        if alpha is not None and any(t.alpha is not None for t in source):
            source = [t for t in source if t.alpha is not None and math.isclose(t.alpha, alpha)]
        if not source:
            raise ValueError(f"no recorded traces to replay for alpha={alpha}")
        label = subject.get("label", "replay")
        return lambda g: ScriptedAgent(source[g % len(source)].actions(player), label)
    if kind == "remote":
        cfg = {k: v for k, v in subject.items() if k not in ("type", "label")}
        if window is not None:
            cfg["memory_window"] = window
        if temperature is not None:
            cfg["temperature"] = temperature
        config = AgentConfig.from_dict(cfg)
        label = subject.get("label") or config.model_id
        return lambda g: RemoteAgent(config, label)
    if kind == "oracle":
        return lambda g: OracleAgent()
    return lambda g: make_agent(subject)


def _play_cell(spec: ExperimentSpec, cell_id: str, make_subject, opponent: str, alpha) -> list[GameTrace]:
    m = spec.matrix

    def one(g):
        seed = derive_seed(spec.master_seed, cell_id, g)
        return play_game(make_subject(g), StrategyAgent(opponent), spec.n_rounds, m, seed=seed, alpha=alpha)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(one, range(spec.k)))
    return [one(g) for g in range(spec.k)]


# -- formatting -------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return f"{x:.10g}"
    return str(x)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write(out_dir: Path, name: str, header, rows) -> Path:
    path = out_dir / name
    path.write_text(_csv_text(header, rows), encoding="utf-8")
    return path


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length series of >= 2 points")
    if np.array_equal(x, y):
        return 1.0 if np.ptp(x) > 0 else float("nan")
    xc, yc = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0:
        return float("nan")
    return float(np.clip(float(xc @ yc) / denom, -1.0, 1.0))


# -- summaries (shared by runs and replay) ------------------------------------------

def _completed(traces):
    return [t for t in traces if not t.failed]


def _pcoop_row(traces, player):
    done = _completed(traces)
    if not done:
        return None, None, None, 0, len(traces)
    curve = coop_prob_per_round(done, player)
    return curve.overall_mean, curve.overall_ci[0], curve.overall_ci[1], len(done), len(traces) - len(done)


def profile_rows(alpha, traces, player):
    done = _completed(traces)
    if not done:
        return [(alpha, d, None, None, None, 0, 0) for d in DIMENSIONS]
    prof = aggregate_profile(done, player)
    return [(alpha, d, s.mean, s.ci_low, s.ci_high, s.n_defined, s.n_games) for d, s in prof.dimensions.items()]


def sfem_rows(alpha, traces, player, cfg: SfemConfig, m: PayoffMatrix):
    done = _completed(traces)
    if not done:
        return []
    fitted = fit(done, player, cfg, m)
    scores = per_strategy_score(done, player, cfg, m, fitted=fitted)
    rows = []
    for name in fitted.strategies:
        group = fitted.group_of(name)
        gid = fitted.degeneracy_groups.index(group) if group is not None else None
        rows.append((alpha, name, fitted.weights[name], scores[name], fitted.beta, fitted.log_likelihood, gid))
    return rows


PCOOP_HEADER = ("alpha", "p_coop", "ci_low", "ci_high", "n_games", "n_failed")
PER_ROUND_HEADER = ("alpha", "round", "mean", "ci_low", "ci_high")
SFEM_HEADER = ("alpha", "strategy", "weight", "score", "beta", "log_likelihood", "degeneracy_group_id")
PROFILE_HEADER = ("alpha", "dimension", "mean", "ci_low", "ci_high", "n_defined", "n_games")
COMPREHENSION_HEADER = ("template", "category", "n_asked", "n_correct", "accuracy", "ci_low", "ci_high")


def _alpha_summaries(cells, spec: ExperimentSpec, out_dir: Path) -> list[Path]:
    pcoop, per_round, sfem_out, prof = [], [], [], []
    for cell, traces in cells:
        alpha = cell["params"].get("alpha")
        pcoop.append((alpha, *_pcoop_row(traces, spec.player)))
        done = _completed(traces)
        if done:
            curve = coop_prob_per_round(done, spec.player)
            per_round += [(alpha, *row) for row in curve.per_round]
        sfem_out += sfem_rows(alpha, traces, spec.player, spec.sfem_config, spec.matrix)
        prof += profile_rows(alpha, traces, spec.player)
    return [
        _write(out_dir, "pcoop.csv", PCOOP_HEADER, pcoop),
        _write(out_dir, "pcoop_per_round.csv", PER_ROUND_HEADER, per_round),
        _write(out_dir, "sfem.csv", SFEM_HEADER, sfem_out),
        _write(out_dir, "profile.csv", PROFILE_HEADER, prof),
    ]


def _window_summaries(cells, spec: ExperimentSpec, out_dir: Path, tail: int = 10) -> list[Path]:
    per_round, steady = [], []
    for cell, traces in cells:
        window = cell["params"]["window"]
        done = _completed(traces)
        if not done:
            steady.append((window, None, None, None, 0, len(traces)))
            continue
        curve = coop_prob_per_round(done, spec.player)
        per_round += [(window, *row) for row in curve.per_round]
        tail = min(tail, curve.per_round[-1][0])
        game_tails = [float(np.mean([a.value == "Cooperate" for a in t.actions(spec.player)[-tail:]]))
                      for t in done]
        ss = steady_state(curve, tail)
        if len(game_tails) >= 2:
            _, low, high = ci95(game_tails, proportion=True)
        else:
            low = high = ss
        steady.append((window, ss, min(low, ss), max(high, ss), len(done), len(traces) - len(done)))
    return [
        _write(out_dir, "window_per_round.csv", ("window", "round", "mean", "ci_low", "ci_high"), per_round),
        _write(out_dir, "steady_state.csv",
               ("window", "steady_state", "ci_low", "ci_high", "n_games", "n_failed"), steady),
    ]


def _temperature_summaries(cells, spec: ExperimentSpec, out_dir: Path) -> list[Path]:
    rows = []
    curves: dict[float, dict[float, float | None]] = {}
    for cell, traces in cells:
        temp, alpha = cell["params"]["temperature"], cell["params"]["alpha"]
        row = _pcoop_row(traces, spec.player)
        rows.append((temp, alpha, *row))
        curves.setdefault(temp, {})[alpha] = row[0]
    corr = []
    temps = list(curves)
    for i, ta in enumerate(temps):
        for tb in temps[i + 1:]:
            alphas = [a for a in curves[ta] if curves[ta][a] is not None and curves[tb].get(a) is not None]
            xa = [curves[ta][a] for a in alphas]
            xb = [curves[tb][a] for a in alphas]
            r = pearson(xa, xb) if len(alphas) >= 2 else None
            corr.append((ta, tb, r, float(np.mean(xa)) if xa else None, float(np.mean(xb)) if xb else None))
    return [
        _write(out_dir, "pcoop_temperature.csv", ("temperature", *PCOOP_HEADER), rows),
        _write(out_dir, "temperature_correlation.csv",
               ("temperature_a", "temperature_b", "pearson", "mean_a", "mean_b"), corr),
    ]


def summarize(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Recompute every trace-derived summary of a run directory. No network access."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
    spec = ExperimentSpec.from_dict(manifest["spec"])
    cells = [(cell, read_jsonl(run_dir / cell["traces"])) for cell in manifest["cells"]]
    kind = manifest["experiment"]
    if kind == "alpha_sweep":
        return _alpha_summaries(cells, spec, out_dir)
    if kind == "window_sweep":
        return _window_summaries(cells, spec, out_dir)
    if kind == "temperature_sweep":
        return _temperature_summaries(cells, spec, out_dir)
    if kind == "comprehension":
        rows = [(c["params"].get("alpha"), *_pcoop_row(ts, spec.player)) for c, ts in cells]
        return [_write(out_dir, "pcoop.csv", PCOOP_HEADER, rows)]
    raise ValueError(f"cannot summarize experiment {kind!r}")


# -- runs ---------------------------------------------------------------------------

@dataclass
class RunArtifact:
    run_dir: Path
    traces_paths: list[Path]
    summary_paths: list[Path]
    manifest: dict

    @property
    def manifest_path(self) -> Path:
        return self.run_dir / "manifest.json"


def _cell_file(cell_id: str) -> str:
    return "traces/" + cell_id.replace("/", "__").replace("=", "_") + ".jsonl"


def _run(spec: ExperimentSpec, grid: list[tuple[str, dict, Callable, str, float | None]],
         config_text: str | None) -> RunArtifact:
    run_dir = Path(spec.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    cells, paths = [], []
    for cell_id, params, make_subject, opponent, alpha in grid:
        traces = _play_cell(spec, cell_id, make_subject, opponent, alpha)
        rel = _cell_file(cell_id)
        paths.append(write_jsonl(traces, run_dir / rel))
        n_failed = sum(t.failed for t in traces)
        if n_failed:
            logger.warning("cell %s: %d of %d games failed", cell_id, n_failed, len(traces))
        cells.append({
            "cell_id": cell_id, "params": params, "opponent": opponent, "traces": rel,
            "seeds": [t.seed for t in traces], "n_games": len(traces), "n_failed": n_failed,
            "failed": n_failed == len(traces),
            "failures": [t.failure for t in traces if t.failed],
        })
    manifest = {
        "experiment": spec.experiment,
        "package_version": __version__,
        "config_text": config_text,
        "spec": spec.to_dict(),
        "cells": cells,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return RunArtifact(run_dir, paths, summarize(run_dir), manifest)


def _alpha_id(a: float) -> str:
    return f"alpha={a:g}"


def run_alpha_sweep(spec: ExperimentSpec, config_text: str | None = None) -> RunArtifact:
    """k games of the subject against URND(alpha) for every alpha in the grid."""
    grid = []
    for a in spec.alphas:
        grid.append((_alpha_id(a), {"alpha": a}, subject_factory(spec.subject, alpha=a), f"URND:{a!r}", a))
    return _run(replace(spec, experiment="alpha_sweep"), grid, config_text)


def run_window_sweep(spec: ExperimentSpec, config_text: str | None = None) -> RunArtifact:
    """k games per memory window against an always-defect opponent (by default)."""
    if _subject_type(spec.subject) not in ("remote", "scripted", "replay"):
        raise ValueError("window sweeps need a remote or scripted subject; windows mean nothing to strategies")
    opponent = spec.opponent or "AD"
    grid = [(f"window={w}", {"window": w}, subject_factory(spec.subject, window=w), opponent, None)
            for w in spec.windows]
    return _run(replace(spec, experiment="window_sweep", opponent=opponent), grid, config_text)


def run_temperature_sweep(spec: ExperimentSpec, config_text: str | None = None) -> RunArtifact:
    """The alpha sweep repeated at every temperature, plus pairwise curve correlations."""
    if _subject_type(spec.subject) == "strategy":
        raise ValueError("temperature sweeps need a remote (or scripted/replay) subject")
    grid = []
    for temp in spec.temperatures:
        for a in spec.alphas:
            grid.append((f"temperature={temp:g}/{_alpha_id(a)}", {"temperature": temp, "alpha": a},
                         subject_factory(spec.subject, temperature=temp, alpha=a), f"URND:{a!r}", a))
    return _run(replace(spec, experiment="temperature_sweep"), grid, config_text)


def run_comprehension_experiment(spec: ExperimentSpec, config_text: str | None = None) -> RunArtifact:
    """Meta-prompting run: n_games against RND, every question at every round."""
    spec = replace(spec, experiment="comprehension")
    agent = subject_factory(spec.subject, window=spec.window)(0)
    report, traces = run_comprehension(agent, StrategyAgent(spec.opponent or "RND"), spec.n_games,
                                       spec.n_rounds, spec.window, spec.matrix, spec.master_seed)
    run_dir = Path(spec.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    rel = "traces/comprehension.jsonl"
    tpath = write_jsonl(traces, run_dir / rel)
    rows = [(name, TEMPLATE_BY_NAME[name].category, s.n_asked, s.n_correct, s.accuracy, s.ci_low, s.ci_high)
            for name, s in report.per_template.items()]
    series = [(name, i, a, c, c / a) for name, pts in report.per_round_series.items() for i, a, c in pts]
    manifest = {
        "experiment": "comprehension",
        "package_version": __version__,
        "config_text": config_text,
        "spec": spec.to_dict(),
        "cells": [{"cell_id": "comprehension", "params": {"alpha": 0.5}, "opponent": spec.opponent or "RND",
                   "traces": rel, "seeds": [t.seed for t in traces], "n_games": len(traces),
                   "n_failed": sum(t.failed for t in traces), "failed": False, "failures": []}],
        "partial": report.partial,
        "failure": report.failure,
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    paths = [
        _write(run_dir, "comprehension.csv", COMPREHENSION_HEADER, rows),
        _write(run_dir, "comprehension_per_round.csv",
               ("template", "round", "n_asked", "n_correct", "accuracy"), series),
    ]
    return RunArtifact(run_dir, [tpath], paths, manifest)


def replay(traces_path: str | Path, out_dir: str | Path | None = None, spec: ExperimentSpec | None = None,
           ) -> list[Path]:
    """Recompute summaries from stored traces.

    ``traces_path`` is either a run directory (its manifest says how to group
    the games) or a single JSONL file, whose games are grouped by ``alpha`` and
    summarized like an alpha sweep.
    """
    path = Path(traces_path)
    if path.is_dir():
        return summarize(path, out_dir)
    traces = read_jsonl(path)
    spec = spec or ExperimentSpec()
    out = Path(out_dir) if out_dir is not None else path.parent / (path.stem + "_summaries")
    out.mkdir(parents=True, exist_ok=True)
    groups: dict = {}
    for t in traces:
        groups.setdefault(t.alpha, []).append(t)
    cells = [({"params": {"alpha": a}}, ts) for a, ts in groups.items()]
    return _alpha_summaries(cells, spec, out)


RUNNERS = {
    "alpha_sweep": run_alpha_sweep,
    "window_sweep": run_window_sweep,
    "temperature_sweep": run_temperature_sweep,
    "comprehension": run_comprehension_experiment,
}
