import math
import warnings

import numpy as np
import pytest

from ipdlab.game import C, D, GameTrace, play_game
from ipdlab.sfem import (SfemConfig, SfemConvergenceWarning, fit, fit_counts, likelihood_of_strategy,
                         match_counts, per_strategy_score)
from ipdlab.strategies import DETERMINISTIC, StrategyAgent, TremblingAgent


def generate(kind, k=100, n=100, eps=0.0, seed=0):
    subject = TremblingAgent(kind, eps) if eps else StrategyAgent(kind)
    return [play_game(subject, StrategyAgent("URND:0.5"), n, seed=seed + g) for g in range(k)]


class TestLikelihood:
    def test_all_matches(self):
        t = play_game(StrategyAgent("TFT"), StrategyAgent("RND"), 40, seed=3)
        assert likelihood_of_strategy(t, "A", "TFT", 0.95) == pytest.approx(40 * math.log(0.95))

    def test_all_mismatch(self):
        t = GameTrace.from_actions("D" * 100, "C" * 100)
        assert likelihood_of_strategy(t, "A", "AC", 0.95) == pytest.approx(100 * math.log(0.05))

    def test_ninety_five_matches(self):
        acts = [C] * 100
        for i in (3, 17, 40, 66, 90):
            acts[i] = D
        t = GameTrace.from_actions(acts, [C] * 100)
        expected = 95 * math.log(0.95) + 5 * math.log(0.05)
        assert likelihood_of_strategy(t, "A", "GRIM", 0.95) == pytest.approx(expected)

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.3])
    def test_beta_bounds(self, beta):
        t = GameTrace.from_actions("C", "C")
        with pytest.raises(ValueError):
            likelihood_of_strategy(t, "A", "AC", beta)

    def test_random_kind_rejected(self):
        with pytest.raises(ValueError):
            likelihood_of_strategy(GameTrace.from_actions("C", "C"), "A", "RND", 0.9)


def test_config_validation():
    with pytest.raises(ValueError):
        SfemConfig(strategy_catalog=())
    with pytest.raises(ValueError):
        SfemConfig(strategy_catalog=("TFT", "RND"))
    with pytest.raises(ValueError):
        SfemConfig(beta_floor=0.5)
    with pytest.raises(ValueError):
        fit([])


def test_pure_ad_noiseless():
    f = fit(generate("AD"))
    assert f.weights["AD"] >= 0.99
    assert f.beta >= 0.99


def test_tft_with_tremble():
    f = fit(generate("TFT", eps=0.05))
    assert f.weights["TFT"] >= 0.90
    assert 0.93 <= f.beta <= 0.97


def test_all_cooperate_degeneracy():
    traces = [play_game(StrategyAgent("AC"), StrategyAgent("AC"), 30, seed=g) for g in range(20)]
    f = fit(traces)
    assert frozenset({"AC", "TFT", "GRIM", "WSLS"}) in f.degeneracy_groups
    assert not f.identifiable("TFT")
    assert f.identifiable("AD")
    group_weight = sum(f.weights[n] for n in ("AC", "TFT", "GRIM", "WSLS"))
    assert group_weight == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("kind", DETERMINISTIC)
def test_fit_invariants(kind):
    f = fit(generate(kind, k=40, n=50, eps=0.1, seed=7))
    w = np.array(list(f.weights.values()))
    assert abs(w.sum() - 1.0) <= 1e-9 and (w >= 0).all()
    assert 0.51 <= f.beta <= 1.0
    for row in f.responsibilities:
        assert sum(row.values()) == pytest.approx(1.0, abs=1e-9)
    assert all(b >= a - 1e-9 for a, b in zip(f.log_likelihood_path, f.log_likelihood_path[1:]))


def test_em_monotone_every_restart():
    traces = generate("WSLS", k=30, n=60, eps=0.2, seed=3) + generate("GRIM", k=30, n=60, eps=0.2, seed=50)
    counts, lengths, _ = match_counts(traces, "A", DETERMINISTIC)
    for seed in range(5):
        f = fit_counts(counts, lengths, DETERMINISTIC, SfemConfig(seed=seed))
        path = f.log_likelihood_path
        assert all(b >= a - 1e-9 for a, b in zip(path, path[1:]))


@pytest.mark.parametrize("kind", DETERMINISTIC)
def test_noiseless_recovery(kind):
    f = fit(generate(kind, k=50, seed=100))
    group = f.group_of(kind)
    share = sum(f.weights[n] for n in group) if group else f.weights[kind]
    assert share >= 0.99


def test_mixture_recovered():
    traces = generate("AD", k=50, eps=0.05, seed=0) + generate("TFT", k=50, eps=0.05, seed=500)
    f = fit(traces)
    assert f.weights["AD"] == pytest.approx(0.5, abs=0.05)
    assert f.weights["TFT"] + f.weights["STFT"] == pytest.approx(0.5, abs=0.05)


def test_permutation_invariance():
    traces = generate("WSLS", k=30, n=50, eps=0.1, seed=1) + generate("STFT", k=20, n=50, eps=0.1, seed=99)
    base = fit(traces)
    rev_catalog = fit(traces, cfg=SfemConfig(strategy_catalog=tuple(reversed(DETERMINISTIC))))
    shuffled = list(traces)
    np.random.default_rng(0).shuffle(shuffled)
    rev_traces = fit(shuffled)
    for other in (rev_catalog, rev_traces):
        for n in DETERMINISTIC:
            assert abs(base.weights[n] - other.weights[n]) <= 1e-9
        assert abs(base.beta - other.beta) <= 1e-9


def test_nonconvergence_warns():
    traces = generate("TFT", k=20, n=30, eps=0.1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        f = fit(traces, cfg=SfemConfig(max_em_iterations=2, restarts=1))
    assert not f.converged
    assert any(issubclass(w.category, SfemConvergenceWarning) for w in caught)


def test_failed_traces_ignored():
    good = generate("AD", k=10, n=20)
    bad = GameTrace.from_actions("CC", "CC")
    bad.failed = True
    assert fit(good + [bad]).weights == pytest.approx(fit(good).weights, abs=1e-12)


class TestScore:
    def test_pure_ad(self):
        assert per_strategy_score(generate("AD", k=30, n=50))["AD"] == 1.0

    def test_half_and_half(self):
        traces = generate("AD", k=50, n=60, seed=0) + [
            play_game(StrategyAgent("AC"), StrategyAgent("RND"), 60, seed=900 + g) for g in range(50)]
        s = per_strategy_score(traces)
        assert s["AD"] == pytest.approx(0.5, abs=0.02)
        assert s["AC"] == pytest.approx(0.5, abs=0.02)
        assert s["AD"] < 1 and s["AC"] < 1

    def test_all_cooperate(self):
        traces = [play_game(StrategyAgent("AC"), StrategyAgent("AC"), 30, seed=g) for g in range(10)]
        s = per_strategy_score(traces)
        for n in ("AC", "TFT", "GRIM", "WSLS"):
            assert s[n] == 1.0
        assert all(0.0 <= v <= 1.0 for v in s.values())
