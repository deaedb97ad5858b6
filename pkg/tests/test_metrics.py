import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ipdlab.game import GameTrace, play_game
from ipdlab.metrics import (aggregate_profile, emulation, forgiveness, niceness, profile, retaliation,
                            troublemaking)
from ipdlab.strategies import StrategyAgent

from oracles import DIMENSION_ORACLES


def T(a: str, b: str) -> GameTrace:
    return GameTrace.from_actions(a, b)


class TestNiceness:
    def test_never_defects(self):
        assert niceness(T("CCC", "DDD")) == 1

    def test_defects_first_round(self):
        assert niceness(T("DCC", "CCC")) == 0

    def test_simultaneous_first_defection(self):
        assert niceness(T("CCCCD", "CCCCD")) == 0

    def test_defects_after_opponent(self):
        assert niceness(T("CCD", "CDD")) == 1
        assert niceness(T("CCD", "CDD"), "B") == 0


class TestForgiveness:
    def test_forgiven(self):
        assert forgiveness(T("CC", "DC")) == 1.0

    def test_undefined_without_defection(self):
        assert forgiveness(T("DCD", "CCC")) is None

    def test_penalty(self):
        # defection t=1 unforgiven, penalty at t=3 -> 0 / (1 + 1)
        assert forgiveness(T("CDD", "DCC")) == 0.0

    def test_last_round_defection_excluded(self):
        assert forgiveness(T("CCC", "CCD")) is None


class TestRetaliation:
    def test_reaction(self):
        assert retaliation(T("CCD", "CDC")) == 1.0

    def test_undefined(self):
        assert retaliation(T("DDDD", "CCCC")) is None

    def test_called_defection_is_not_provocation(self):
        # B's round-2 defection answers A's round-1 defection
        assert retaliation(T("DCC", "CDC")) is None


class TestTroublemaking:
    def test_first_move(self):
        assert troublemaking(T("DCC", "DDD")) == 1.0

    def test_ac(self):
        assert troublemaking(T("CCCC", "DCDC")) == 0.0

    def test_half(self):
        assert troublemaking(T("CD", "CC")) == 0.5


class TestEmulation:
    def test_ac_vs_ad(self):
        assert emulation(T("CCCC", "DDDD")) == 0.0

    def test_hand_example(self):
        assert emulation(T("CDD", "DDC")) == 1.0

    def test_needs_two_rounds(self):
        with pytest.raises(ValueError):
            emulation(T("C", "D"))


pair = st.integers(2, 12).flatmap(
    lambda n: st.tuples(st.text(alphabet="CD", min_size=n, max_size=n), st.text(alphabet="CD", min_size=n, max_size=n)))


@settings(max_examples=300, deadline=None)
@given(pair)
def test_matches_brute_oracles(ab):
    a, b = ab
    got_a, got_b = profile(T(a, b), "A"), profile(T(a, b), "B")
    for name, oracle in DIMENSION_ORACLES.items():
        assert got_a[name] == oracle(a, b)
        assert got_b[name] == oracle(b, a)


def test_thousand_random_traces_match_oracles():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(2, 13))
        a = "".join(rng.choice(["C", "D"], n))
        b = "".join(rng.choice(["C", "D"], n))
        got = profile(T(a, b))
        assert got == {k: f(a, b) for k, f in DIMENSION_ORACLES.items()}, (a, b)


@settings(max_examples=300, deadline=None)
@given(pair)
def test_defined_values_in_unit_interval(ab):
    for v in profile(T(*ab)).values():
        assert v is None or 0.0 <= v <= 1.0


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="CD", min_size=2, max_size=40))
def test_tft_signature(opp):
    tft = "C" + opp[:-1]
    p = profile(T(tft, opp))
    assert p["nice"] == 1
    assert p["emulative"] == 1.0
    assert p["retaliatory"] in (None, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="CD", min_size=2, max_size=40))
def test_ac_signature(opp):
    p = profile(T("C" * len(opp), opp))
    if "D" in opp[:-1]:
        assert p["forgiving"] == 1.0
        assert p["retaliatory"] == 0.0


def test_ad_troublemaking_vs_cooperator():
    assert troublemaking(T("D" * 20, "C" * 20)) == 1.0


def test_aggregate_ac_vs_all_defect():
    traces = [play_game(StrategyAgent("AC"), StrategyAgent("URND:0.0"), 100, seed=g) for g in range(100)]
    prof = aggregate_profile(traces)
    assert prof["forgiving"].mean == 1.0
    assert prof["retaliatory"].mean == 0.0
    assert prof["nice"].mean == 1.0
    assert prof["nice"].n_games == 100


def test_aggregate_undefined_everywhere():
    traces = [play_game(StrategyAgent("RND"), StrategyAgent("AC"), 30, seed=g) for g in range(10)]
    prof = aggregate_profile(traces)
    assert prof["retaliatory"].mean is None
    assert prof["retaliatory"].n_defined == 0
    assert prof["retaliatory"].n_undefined == 10
    assert prof["forgiving"].mean is None


def test_aggregate_partial_undefined_counts():
    traces = [T("CCC", "CCC"), T("CCC", "DCC"), T("CDC", "DCC")]
    prof = aggregate_profile(traces)
    assert prof["forgiving"].n_defined == 2
    assert prof["forgiving"].mean == pytest.approx(0.5)
