from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from logisticlab.dynamics import cached_orbit
from logisticlab.errors import InvalidInput, ToleranceInfeasible
from logisticlab.tuner import (TargetProfile, _continue, _running_dwell, dwell_schedule,
                               pullback_windows, schedule_fractions)

A = Fraction(39, 10)


def test_profile_validation():
    with pytest.raises(InvalidInput):
        TargetProfile(((1, Fraction(1, 2)),), Fraction(1, 8))
    with pytest.raises(InvalidInput):
        TargetProfile(((1, Fraction(1, 2)), (1, Fraction(1, 2))), Fraction(1, 8))
    with pytest.raises(InvalidInput):
        TargetProfile(((0, 1),), Fraction(1, 8))
    with pytest.raises(InvalidInput):
        TargetProfile(((1, 1),), 0)
    with pytest.raises(InvalidInput):
        TargetProfile(((1, 1),), Fraction(1, 8), free=(2,))


def test_profile_json_round_trip():
    p = TargetProfile(((7, Fraction(1, 8)), (1, Fraction(1, 2)), (4, Fraction(3, 8))), Fraction(1, 200),
                      free=(7, 4), mass_tolerance=Fraction(1, 800), w1_tolerance=None, stage_length=4096)
    assert TargetProfile.from_json(p.to_json()) == p
    q = TargetProfile(((1, 1),), Fraction(1, 8))
    assert q.w1_tolerance == Fraction(1, 8) and q.mass_tolerance == Fraction(1, 8)
    assert TargetProfile.from_json(q.to_json()) == q


weights = st.lists(st.integers(1, 50), min_size=1, max_size=5)


@settings(max_examples=50, deadline=None)
@given(weights, st.integers(3, 9))
def test_schedule_fractions_meet_tolerance(ws, e):
    total = sum(ws)
    prof = TargetProfile(tuple((i + 1, Fraction(w, total)) for i, w in enumerate(ws)), Fraction(1, 1 << e))
    sched = dwell_schedule(prof)
    fr = schedule_fractions(sched)
    assert [n for n, _ in sched] == prof.indices
    assert sum(fr.values()) < 1
    for n, l in prof.entries:
        assert abs(fr[n] - l) <= prof.tolerance / 4


def test_fixed_stage_length():
    prof = TargetProfile(((1, Fraction(1, 4)), (2, Fraction(3, 4))), Fraction(1, 8), stage_length=1000)
    sched = dwell_schedule(prof, overhead=10)
    assert sched == [(1, 245), (2, 735)]
    with pytest.raises(ToleranceInfeasible):
        dwell_schedule(TargetProfile(((1, 1),), Fraction(1, 8), stage_length=5), overhead=10)


def test_running_dwell_and_continuation():
    assert _running_dwell("LLRRLRRL", "RRL") == 7
    assert _running_dwell("RRLRL", "RRL") == 2
    assert _continue("LLRRLRRL", "RRL", 4) == "RRLR"
    assert _running_dwell("", "RRL") == 0


def _g_derivative(a, x):
    a, x = mpmath.mpf(a.numerator) / a.denominator, mpmath.mpf(x)
    d = mpmath.mpf(1)
    for _ in range(3):
        d *= a * (1 - 2 * x)
        x = a * x * (1 - x)
    return d


def test_pullback_windows_contract_at_the_multiplier():
    wins = pullback_windows(A, 1, 5)
    p = cached_orbit(A, 1).g_points[0]
    mpmath.mp.prec = 120
    rate = 1 / abs(_g_derivative(A, mpmath.mpf(p.mid.num) / 2 ** p.mid.exp))
    assert float(rate) == pytest.approx(0.18745, abs=1e-4)
    widths = [w.interval.width.to_fraction() for w in wins]
    ratios = [float(b / a) for a, b in zip(widths, widths[1:])]
    assert abs(ratios[-1] - float(rate)) < 1e-3
    for w0, w1 in zip(wins, wins[1:]):
        # disjoint and each one closer to the anchor than the last
        assert w0.interval.hi <= w1.interval.lo or w1.interval.hi <= w0.interval.lo
        assert abs(w1.interval.mid.to_fraction() - p.mid.to_fraction()) < abs(w0.interval.mid.to_fraction() - p.mid.to_fraction())
    c = wins[0].contraction
    assert float(c.lo) <= float(rate) <= float(c.hi)


def test_tune_inside_frozen_cell_keeps_oracle_prefix():
    from logisticlab.numerics import DyadicInterval, DyadicRational, LazyParameter
    from logisticlab.tuner import tune, verify_tuned
    k = 15974  # the 12-bit cell containing 3.9
    cell = DyadicInterval(DyadicRational(k, 12), DyadicRational(k + 1, 12))
    par = LazyParameter.exact(Fraction(2 * k + 1, 1 << 13))
    prof = TargetProfile(((1, 1),), Fraction(1, 8))
    tp = tune(cell, prof, 12, parent=par)
    assert cell.lo <= tp.a_star.lo and tp.a_star.hi <= cell.hi
    assert [tp.parameter.oracle(m) for m in range(1, 13)] == [par.oracle(m) for m in range(1, 13)]
    assert abs(tp.masses[1] - 1) <= prof.tolerance
    assert all(m < prof.tolerance for m in tp.other_masses.values())
    verify_tuned(tp, prof, cell)
