import copy
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from logisticlab.errors import InvalidInput, SearchError, VerificationError
from logisticlab.game import (BirkhoffSampler, GameConfig, OracleHandle, PTildeProfile, derive_seed,
                              make_opponent, make_tau, retune_bracket, run_game, verify_transcript)
from logisticlab.dynamics import find_tip_c, lambda_measure
from logisticlab.measures import integrate
from logisticlab.numerics import DyadicInterval, DyadicRational, LazyParameter

bits = st.lists(st.integers(0, 1), max_size=3)


@given(bits)
def test_profile_masses_are_consistent(choices):
    p = PTildeProfile()
    for n, s in enumerate(choices, start=1):
        p = p.decide(n, s)
    m = p.masses
    assert len(m) == 2 * len(choices)
    for n, s in p.decided:
        assert p.mass(2 * n - s) == Fraction(1, 1 << n)
        assert p.mass(2 * n - 1 + s) == 0
    assert p.tail == Fraction(1, 1 << len(choices))
    assert PTildeProfile.from_json(p.to_json()) == p


@given(bits)
def test_profile_target_is_a_valid_tuner_profile(choices):
    p = PTildeProfile(tuple(enumerate(choices, start=1)))
    N = p.level
    t = p.target(9, Fraction(1, 16), 4096)
    assert t.indices[0] == 9 and t.indices[-1] == 2 * N + 2
    assert sum(w for _, w in t.entries) == 1
    assert t.free == (9, 2 * N + 2)
    assert t.mass_tolerance == Fraction(1, 400 << N)


def test_profile_rejects_out_of_order_rounds():
    with pytest.raises(InvalidInput):
        PTildeProfile(((2, 1),))
    with pytest.raises(InvalidInput):
        PTildeProfile(((1, 2),))
    with pytest.raises(InvalidInput):
        PTildeProfile().decide(2, 0)


def test_oracle_handle_logs_and_limits():
    par = LazyParameter.exact(Fraction(39, 10))
    h = OracleHandle(par, max_queries=3)
    h.query(5)
    h.query(12)
    assert h.log == [5, 12] and h.deepest == 12
    h.query(1)
    with pytest.raises(SearchError):
        h.query(2)
    r = OracleHandle({m: par.oracle(m) for m in range(1, 9)}, limit=8)
    assert r.query(8) == par.oracle(8)
    with pytest.raises(VerificationError):
        r.query(9)
    gap = OracleHandle({1: par.oracle(1)}, limit=8)
    with pytest.raises(VerificationError):
        gap.query(5)


def test_opponents_are_deterministic():
    a = Fraction(39, 10)
    tau = make_tau(a, 1, 7)
    par = LazyParameter.exact(a)
    opp = BirkhoffSampler(seed=3, iterates=2000)
    q1 = opp.estimate(tau, Fraction(1, 200), OracleHandle(par))
    q2 = make_opponent(opp.identity()).estimate(tau, Fraction(1, 200), OracleHandle(par))
    assert q1 == q2
    assert make_opponent("constant:value=1/3").estimate(tau, 0, None) == Fraction(1, 3)
    ad = make_opponent("adaptive:iterates=500,seed=2")
    h = OracleHandle(par)
    ad.estimate(tau, Fraction(1, 200), h)
    assert h.log[0] == 8 and h.log == sorted(h.log)
    with pytest.raises(InvalidInput):
        make_opponent("oracle-peeker")


def test_seed_streams_are_distinct_and_stable():
    s = {derive_seed(2024, "opponent", n) for n in range(1, 6)}
    assert len(s) == 5
    assert derive_seed(2024, "opponent", 1) == derive_seed(2024, "opponent", 1)


def test_separating_tau_for_round_one():
    a = Fraction(39, 10)
    tau = make_tau(a, 1, 7)
    assert integrate(tau, lambda_measure(a, 1)) == 1
    for j in (2, 3, 4, 5, 6, 7, 8, 9):
        assert integrate(tau, lambda_measure(a, j)) == 0


@pytest.mark.parametrize("l_n", [0, 1, 8, 48])
def test_retune_bracket_stays_in_cell(l_n):
    a = DyadicInterval.enclosing(Fraction(39, 10), 200)
    br = retune_bracket(a, l_n)
    l = max(l_n, 1)
    assert br.lo < br.hi
    assert br.hi - br.lo <= DyadicRational(1, 3 * l)
    k = a.mid.scaled(l, "floor")
    assert DyadicRational(k, l) <= br.lo and br.hi <= DyadicRational(k + 1, l)
    assert br.lo >= find_tip_c(256).hi


def test_zero_round_game():
    tip = find_tip_c(256).hi
    tr = run_game(DyadicInterval(tip, DyadicRational(4)), [], 0)
    d = tr.to_json()
    assert d["rounds"] == [] and d["status"] == "complete"
    with pytest.raises(InvalidInput):
        run_game(DyadicInterval(tip, DyadicRational(4)), ["constant"], 2)


def test_config_lead_in():
    c = GameConfig(max_rounds=2)
    assert c.lead == 7 and c.lead_weight == Fraction(1, 8) and c.stage_length == 4096


def _round(d, n):
    return next(r for r in d["rounds"] if r["n"] == n)


@pytest.mark.parametrize("tamper", ["q", "answers", "tau", "opponent", "move"])
def test_tampered_transcript_is_not_fooled(game_run, tamper):
    d = copy.deepcopy(game_run["transcript"].to_json())
    r = _round(d, 1)
    if tamper == "q":
        r["q"] = "1/2"
    elif tamper == "answers":
        m = max(r["oracle_answers"], key=int)
        del r["oracle_answers"][m]
    elif tamper == "tau":
        r["tau_index"] = str(int(r["tau_index"]) + 1)
    elif tamper == "opponent":
        r["opponent"]["seed"] += 1
    elif tamper == "move":
        r["l_n"] = 400
    rep = verify_transcript(d, deep=False)
    v = rep["rounds"][0]
    assert v["verdict"] == "NOT-FOOLED" and not rep["ok"]
    assert v["reasons"]


def test_untampered_transcript_shallow(game_run):
    rep = verify_transcript(game_run["transcript"].to_json(), deep=False)
    assert rep["ok"], rep


def test_contrarian_opponent_forces_case_two(cache_dir, default_bracket):
    # an opponent that always answers 1 pushes the round mass onto Per(2)
    tr = run_game(default_bracket, ["constant:value=1"], 1,
                  GameConfig(rounds=1, max_rounds=2, cache_dir=cache_dir))
    assert tr.status == "complete"
    r = tr.rounds[0]
    assert r.case == 2 and r.s == 0 and r.l_n == 0
    assert tr.profile.mass(2) == Fraction(1, 2) and tr.profile.mass(1) == 0
    assert r.fooling_margin > 1 - Fraction(1, 100)
    rep = verify_transcript(tr.to_json())
    assert rep["ok"] and rep["rounds"][0]["verdict"] == "FOOLED"
