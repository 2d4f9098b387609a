from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from logisticlab.errors import (FrozenPrefixViolation, InvalidInput, NoSignChange,
                                EnclosureBlowup)
from logisticlab.numerics import (DyadicInterval, DyadicRational, LazyParameter, as_fraction,
                                  bisect_monotone, bisect_sign, iterate_enclosure)

from oracles import exact_orbit

dyadics = st.builds(DyadicRational, st.integers(-10**12, 10**12), st.integers(0, 80))


@given(dyadics, dyadics)
def test_arithmetic_matches_fractions(x, y):
    fx, fy = x.to_fraction(), y.to_fraction()
    assert (x + y).to_fraction() == fx + fy
    assert (x - y).to_fraction() == fx - fy
    assert (x * y).to_fraction() == fx * fy
    assert (x < y) == (fx < fy)
    assert (x == y) == (fx == fy)


@given(dyadics)
def test_canonical_form(x):
    y = DyadicRational(x.num << 5, x.exp + 5)
    assert y == x and y.num == x.num and y.exp == x.exp
    assert hash(x) == hash(y)


@given(st.fractions(), st.integers(0, 60))
def test_rounding_modes(f, e):
    lo = DyadicRational.round(f, e, "floor").to_fraction()
    hi = DyadicRational.round(f, e, "ceil").to_fraction()
    near = DyadicRational.round(f, e, "nearest").to_fraction()
    ulp = Fraction(1, 1 << e)
    assert lo <= f <= hi and hi - lo <= ulp
    assert abs(near - f) <= ulp / 2


def test_non_dyadic_rejected():
    with pytest.raises(InvalidInput):
        DyadicRational.from_value(Fraction(1, 3))
    with pytest.raises(InvalidInput):
        as_fraction("abc")


def test_decimal_is_exact():
    assert DyadicRational(27097, 15).decimal() == "0.826934814453125"
    assert DyadicRational(-3, 2).decimal() == "-0.75"


@given(st.fractions(min_value=0, max_value=1), st.integers(4, 60))
def test_enclosing_interval(f, bits):
    iv = DyadicInterval.enclosing(f, bits)
    assert iv.lo.to_fraction() <= f <= iv.hi.to_fraction()
    assert iv.width_le_pow2(bits)


def test_interval_set_operations():
    a = DyadicInterval(DyadicRational(1, 2), DyadicRational(3, 2))
    b = DyadicInterval(DyadicRational(1, 1), DyadicRational(1, 0))
    assert a.overlaps(b)
    assert a.intersect(b) == DyadicInterval(DyadicRational(1, 1), DyadicRational(3, 2))
    assert a.hull(b) == DyadicInterval(DyadicRational(1, 2), DyadicRational(1))
    assert DyadicInterval(DyadicRational(1, 1)).is_point()
    assert not a.is_point()


def test_orbit_of_three_and_a_half():
    iv = iterate_enclosure(Fraction(7, 2), Fraction(1, 2), 3)
    assert iv.is_point() and iv.lo.to_fraction() == Fraction(27097, 32768)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 1 << 20), st.integers(0, 1 << 20), st.integers(1, 8))
def test_enclosure_contains_exact_orbit(ka, kx, n):
    a = Fraction(4 * ka, 1 << 20)
    x = Fraction(kx, 1 << 20)
    exact = exact_orbit(a, x, n)[-1]
    iv = iterate_enclosure(a, x, n, work_bits=40)
    assert iv.lo.to_fraction() <= exact <= iv.hi.to_fraction()


def test_enclosure_blowup_is_reported():
    a = DyadicInterval.enclosing(Fraction(39, 10), 40)
    with pytest.raises(EnclosureBlowup):
        iterate_enclosure(a, Fraction(1, 4), 400, work_bits=80, max_width=Fraction(1, 2))


def test_bisect_monotone_square_root():
    br = DyadicInterval(DyadicRational(1), DyadicRational(2))
    iv = bisect_monotone(lambda x: x * x >= 2, br, 50, audit=16)
    assert iv.lo * iv.lo < 2 <= iv.hi * iv.hi
    assert iv.width_le_pow2(50)
    with pytest.raises(NoSignChange):
        bisect_monotone(lambda x: True, br, 10)


def test_bisect_sign_exact_zero_gives_point():
    br = DyadicInterval(DyadicRational(0), DyadicRational(1))
    iv = bisect_sign(lambda x: (x > DyadicRational(3, 3)) - (x < DyadicRational(3, 3)), br, 30)
    assert iv.is_point() and iv.lo == DyadicRational(3, 3)


@given(st.fractions(min_value=Fraction(7, 2), max_value=4), st.integers(1, 60))
def test_oracle_answers_are_valid(a, m):
    p = LazyParameter.exact(a)
    q = p.oracle(m)
    assert q.exp <= m
    assert abs(q.to_fraction() - a) < Fraction(2, 1 << m)
    assert p.oracle(m) == q


def test_derived_parameter_keeps_frozen_answers():
    p = LazyParameter.exact(Fraction(39, 10))
    answers = [p.oracle(m) for m in range(1, 21)]
    near = DyadicInterval.enclosing(Fraction(39, 10) + Fraction(1, 1 << 70), 90)
    child = p.derive(near, None, 20)
    assert [child.oracle(m) for m in range(1, 21)] == answers
    far = DyadicInterval.enclosing(Fraction(38, 10), 60)
    with pytest.raises(FrozenPrefixViolation):
        p.derive(far, None, 20)


@given(st.integers(1, 60), st.integers(0, 4))
def test_bisect_evaluation_count(bits, log_width):
    calls = []

    def pred(x):
        calls.append(x)
        return x * x * x >= 3

    br = DyadicInterval(DyadicRational(1), DyadicRational(1) + DyadicRational(1 << log_width, 0))
    if not br.hi * br.hi * br.hi >= 3:
        return
    iv = bisect_monotone(pred, br, bits)
    # one halving per step from the bracket width down to 2**-bits, plus both ends
    assert len(calls) <= bits + log_width + 2
    assert iv.width_le_pow2(bits)
