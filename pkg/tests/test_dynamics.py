from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from logisticlab.dynamics import (SymbolicWord, cached_orbit, enumerate_words, find_tip_c, itinerary,
                                  lambda_measure, solve_periodic_orbit, solve_stage,
                                  word_index, words_of_period)
from logisticlab.errors import BranchLost, InvalidInput
from logisticlab.numerics import DyadicInterval, DyadicRational

mpmath.mp.prec = 200
A = Fraction(39, 10)


def mpf(x):
    if isinstance(x, DyadicInterval):
        x = x.mid
    if isinstance(x, DyadicRational):
        return mpmath.mpf(x.num) / mpmath.mpf(2) ** x.exp
    return mpmath.mpf(x.numerator) / x.denominator


def f(a, x):
    return a * x * (1 - x)


def g(a, x):
    return f(a, f(a, f(a, x)))


def test_stage_landmarks_against_high_precision():
    geo = solve_stage(A, 64)
    a = mpf(A)
    beta, bp = mpf(geo.beta), mpf(geo.beta_prime)
    assert abs(g(a, beta) - beta) < mpmath.mpf(2) ** -58
    assert abs(bp - (1 - beta)) < mpmath.mpf(2) ** -62
    for lm in (geo.l, geo.r):
        assert abs(g(a, mpf(lm)) - bp) < mpmath.mpf(2) ** -56
    assert geo.beta_prime.hi < geo.l.lo < geo.l.hi < Fraction(1, 2) < geo.r.lo < geo.r.hi < geo.beta.lo


def test_stage_refused_below_tip():
    with pytest.raises(BranchLost):
        solve_stage(Fraction(385, 100), 64)


def test_tip_parameter_against_root_finder():
    c = find_tip_c(64)
    h = lambda a: g(a, g(a, mpmath.mpf(1) / 2)) - g(a, g(a, g(a, mpmath.mpf(1) / 2)))
    root = mpmath.findroot(h, mpmath.mpf("3.8568"))
    assert mpf(c.lo) <= root <= mpf(c.hi)
    assert c.width_le_pow2(64)
    assert float(c.lo) == pytest.approx(3.8568006524777648, abs=1e-15)


def test_word_counts_are_necklace_counts():
    # primitive binary necklaces: 2, 1, 2, 3, 6, 9, 18, 30
    assert [len(words_of_period(k)) for k in range(1, 9)] == [2, 1, 2, 3, 6, 9, 18, 30]
    assert [w.letters for w in enumerate_words(5)] == ["1", "0", "10", "110", "100"]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 300))
def test_word_index_round_trip(n):
    w = enumerate_words(n)[n - 1]
    assert word_index(w.letters) == n
    assert word_index(w.rotation(1)) == n


def test_invalid_words_rejected():
    for bad in ("1010", "01", "12", ""):
        with pytest.raises(InvalidInput):
            SymbolicWord(bad)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 9])
def test_periodic_points_are_periodic(n):
    orb = solve_periodic_orbit(A, n, 64)
    a = mpf(A)
    p = len(orb.f_points)
    pts = sorted(orb.f_points, key=lambda iv: iv.lo)
    x = mpf(orb.g_points[0])
    for _ in range(p):
        x = f(a, x)
    assert abs(x - mpf(orb.g_points[0])) < mpmath.mpf(2) ** -50
    for iv in pts:
        assert iv.width_le_pow2(64)
    assert all(p0.hi < p1.lo for p0, p1 in zip(pts, pts[1:]))


def test_fixed_word_orbit_letters():
    assert cached_orbit(A, 1).f_letters() == "RRL"
    assert cached_orbit(A, 1).f_period == 3


def test_itinerary_shift_equivariance():
    geo = solve_stage(A, 96)
    orb = cached_orbit(A, 9, 64)
    k = orb.g_period
    for j, p in enumerate(orb.g_points):
        it = itinerary(A, p, 3 * k, geo)
        assert it.status == "ok"
        assert it.letters == (orb.word.rotation(j) * 3)[:3 * k]


def test_itinerary_reports_escape():
    geo = solve_stage(A, 96)
    it = itinerary(A, DyadicInterval(DyadicRational(1, 3)), 10, geo)
    assert it.status == "escape"


def test_lambda_measure_is_uniform():
    lam = lambda_measure(A, 3)
    assert len(lam) == 6
    assert set(lam.weights) == {Fraction(1, 6)}


def test_stage_at_four_matches_closed_form_period_three_points():
    # period-3 points of f_4 are sin^2(k pi / 7) and sin^2(k pi / 9)
    geo = solve_stage(4, 64)
    beta = mpf(geo.beta)
    closed = [mpmath.sin(k * mpmath.pi / d) ** 2 for d in (7, 9) for k in range(1, d)]
    assert min(abs(beta - c) for c in closed) < mpmath.mpf(2) ** -60
    assert 0.5 < beta < 1
    assert geo.beta_prime.lo + geo.beta.hi >= 1 >= geo.beta_prime.hi + geo.beta.lo
