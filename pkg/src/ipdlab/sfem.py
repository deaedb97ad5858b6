"""Strategy Frequency Estimation Method (SFEM).

Finite-mixture maximum likelihood over a catalog of deterministic strategies
with a shared tremble parameter ``beta`` (the probability that the player
executes the prescribed action). Each observed history is assumed to come
from one strategy; the mixture weights say how often each strategy is used.

The likelihood of one history under strategy k is

    beta ** matches * (1 - beta) ** (n_rounds - matches)

so the whole fit only needs the match-count matrix (histories x strategies).
"""

from __future__ import annotations

import logging
import warnings
import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .game import DEFAULT_MATRIX, GameTrace, PayoffMatrix
from .strategies import DETERMINISTIC, StrategyKind, prescribe

logger = logging.getLogger(__name__)

BETA_CEIL = 1.0 - 1e-10


class SfemConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SfemConfig:
    strategy_catalog: tuple[str, ...] = DETERMINISTIC
    max_em_iterations: int = 2000
    log_likelihood_tolerance: float = 1e-8
    restarts: int = 10
    beta_floor: float = 0.51
    seed: int = 0

    def __post_init__(self):
        if not self.strategy_catalog:
            raise ValueError("strategy catalog is empty")
        for name in self.strategy_catalog:
            if not StrategyKind.parse(name).deterministic:
                raise ValueError(f"SFEM catalog takes deterministic strategies only, got {name}")
        if len(set(self.strategy_catalog)) != len(self.strategy_catalog):
            raise ValueError("duplicate strategies in catalog")
        if not 0.5 < self.beta_floor <= 1.0:
            raise ValueError("beta_floor must lie in (0.5, 1]")
        if self.restarts < 1 or self.max_em_iterations < 1:
            raise ValueError("restarts and max_em_iterations must be >= 1")


@dataclass
class SfemFit:
    strategies: tuple[str, ...]
    weights: dict[str, float]
    beta: float
    log_likelihood: float
    responsibilities: list[dict[str, float]]
    degeneracy_groups: list[frozenset[str]]
    converged: bool = True
    n_iterations: int = 0
    log_likelihood_path: list[float] = field(default_factory=list, repr=False)
    # match counts and history lengths the fit was computed from
    counts: np.ndarray | None = field(default=None, repr=False, compare=False)
    lengths: np.ndarray | None = field(default=None, repr=False, compare=False)

    def group_of(self, name: str) -> frozenset[str] | None:
        for g in self.degeneracy_groups:
            if name in g:
                return g
        return None

    def identifiable(self, name: str) -> bool:
        return self.group_of(name) is None


def match_counts(traces: Sequence[GameTrace], player: str, strategies: Sequence[str],
                 m: PayoffMatrix = DEFAULT_MATRIX) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Matches per (history, strategy), history lengths and raw prescriptions.

    Prescriptions are returned per strategy as a flat 0/1 array over all rounds
    of all histories, which is what degeneracy detection compares.
    """
    counts = np.zeros((len(traces), len(strategies)))
    lengths = np.array([len(t) for t in traces], dtype=float)
    flat = []
    for k, name in enumerate(strategies):
        presc_all = []
        for j, t in enumerate(traces):
            presc = prescribe(name, t, player, m)
            observed = t.actions(player)
            counts[j, k] = sum(p is o for p, o in zip(presc, observed))
            presc_all.extend(p.value == "Cooperate" for p in presc)
        flat.append(np.array(presc_all, dtype=bool))
    return counts, lengths, flat


def likelihood_of_strategy(trace: GameTrace, player: str, kind: StrategyKind | str, beta: float,
                           m: PayoffMatrix = DEFAULT_MATRIX) -> float:
    """Log-likelihood of one observed history under ``kind`` with tremble ``beta``."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    presc = prescribe(kind, trace, player, m)
    matches = sum(p is o for p, o in zip(presc, trace.actions(player)))
    return matches * np.log(beta) + (len(presc) - matches) * np.log1p(-beta)


def _loglik_matrix(counts, lengths, beta):
    return counts * np.log(beta) + (lengths[:, None] - counts) * np.log1p(-beta)


def _degeneracy_groups(names, flat) -> list[frozenset[str]]:
    groups: dict[bytes, list[str]] = {}
    for name, presc in zip(names, flat):
        groups.setdefault(presc.tobytes(), []).append(name)
    return sorted((frozenset(g) for g in groups.values() if len(g) > 1), key=lambda g: sorted(g))


def _initial_point(names, cfg: SfemConfig, restart: int):
    if restart == 0:
        phi = np.full(len(names), 1.0 / len(names))
        beta = 0.8
    else:
        # per-strategy streams keep the start point independent of catalog order
        draws = [np.random.default_rng([cfg.seed, restart, zlib.crc32(n.encode())]).gamma(1.0)
                 for n in names]
        phi = np.array(draws) / sum(draws)
        beta = float(np.random.default_rng([cfg.seed, restart]).uniform(cfg.beta_floor, 0.99))
    return phi, max(beta, cfg.beta_floor)


def _em(counts, lengths, phi, beta, cfg: SfemConfig):
    path = []
    converged = False
    resp = None
    for it in range(cfg.max_em_iterations):
        with np.errstate(divide="ignore"):
            joint = np.log(phi)[None, :] + _loglik_matrix(counts, lengths, beta)
        per_trace = logsumexp(joint, axis=1)
        ll = float(per_trace.sum())
        path.append(ll)
        resp = np.exp(joint - per_trace[:, None])
        if it > 0 and ll - path[-2] < cfg.log_likelihood_tolerance:
            converged = True
            break
        phi = resp.mean(axis=0)
        beta = float((resp * counts).sum() / (resp * lengths[:, None]).sum())
        beta = min(max(beta, cfg.beta_floor), BETA_CEIL)
    return phi, beta, resp, path, converged


def fit(traces: Sequence[GameTrace], player: str = "A", cfg: SfemConfig | None = None,
        m: PayoffMatrix = DEFAULT_MATRIX) -> SfemFit:
    """Fit mixture weights and the shared tremble by EM, best of ``cfg.restarts`` starts."""
    cfg = cfg or SfemConfig()
    traces = [t for t in traces if not t.failed]
    if not traces:
        raise ValueError("SFEM needs at least one completed trace")
    names = tuple(cfg.strategy_catalog)
    counts, lengths, flat = match_counts(traces, player, names, m)
    fitted = fit_counts(counts, lengths, names, cfg, groups=_degeneracy_groups(names, flat))
    fitted.counts, fitted.lengths = counts, lengths
    return fitted


def fit_counts(counts: np.ndarray, lengths: np.ndarray, names: Sequence[str],
               cfg: SfemConfig | None = None, groups=None) -> SfemFit:
    """EM on a precomputed match-count matrix."""
    cfg = cfg or SfemConfig(strategy_catalog=tuple(names))
    best = None
    for r in range(cfg.restarts):
        phi0, beta0 = _initial_point(names, cfg, r)
        phi, beta, resp, path, converged = _em(counts, lengths, phi0, beta0, cfg)
        if best is None or path[-1] > best[3][-1]:
            best = (phi, beta, resp, path, converged)
    phi, beta, resp, path, converged = best
    if not converged:
        warnings.warn(f"SFEM EM did not converge in {cfg.max_em_iterations} iterations",
                      SfemConvergenceWarning, stacklevel=2)
    names = tuple(names)
    return SfemFit(
        strategies=names,
        weights={n: float(w) for n, w in zip(names, phi)},
        beta=beta,
        log_likelihood=path[-1],
        responsibilities=[{n: float(v) for n, v in zip(names, row)} for row in resp],
        degeneracy_groups=groups or [],
        converged=converged,
        n_iterations=len(path),
        log_likelihood_path=path,
    )


def per_strategy_score(traces: Sequence[GameTrace], player: str = "A", cfg: SfemConfig | None = None,
                       m: PayoffMatrix = DEFAULT_MATRIX, fitted: SfemFit | None = None) -> dict[str, float]:
    """Per-history likelihood of each strategy relative to the best one, averaged over histories.

    Unlike mixture weights these scores need not sum to 1; a strategy scores 1
    on a history whenever no other catalog strategy explains it better.
    ``fitted``, when given, must come from these same traces.
    """
    cfg = cfg or SfemConfig()
    traces = [t for t in traces if not t.failed]
    if fitted is None:
        fitted = fit(traces, player, cfg, m)
    names = fitted.strategies
    if fitted.counts is not None and len(fitted.counts) == len(traces):
        counts, lengths = fitted.counts, fitted.lengths
    else:
        counts, lengths, _ = match_counts(traces, player, names, m)
    beta = min(max(fitted.beta, 1e-12), BETA_CEIL)
    ll = _loglik_matrix(counts, lengths, beta)
    rel = np.exp(ll - ll.max(axis=1, keepdims=True))
    return {n: float(v) for n, v in zip(names, rel.mean(axis=0))}
