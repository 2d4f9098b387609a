from fractions import Fraction

from hypothesis import given, settings, strategies as st

from logisticlab import kneading as kn
from logisticlab.numerics import DyadicRational


def float_kneading(a, n):
    x, out = 0.5, []
    for _ in range(n):
        x = a * x * (1 - x)
        out.append("L" if x < 0.5 else "R")
    return "".join(out)


def test_kneading_matches_float_orbit_for_short_prefixes():
    for a in (Fraction(39, 10), Fraction(37, 10), Fraction(7, 2), Fraction(359, 100)):
        d = DyadicRational.round(a, 64, "nearest")
        assert kn.kneading(d, 20) == float_kneading(float(d), 20)


def test_superstable_parameter_hits_critical_point():
    assert kn.kneading(2, 5) == "C"
    assert kn.kneading(4, 3) == "RLL"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 1 << 16), st.integers(0, 1 << 16))
def test_kneading_is_monotone_in_the_parameter(i, j):
    lo, hi = sorted((i, j))
    if lo == hi:
        return
    a0 = DyadicRational((3 << 16) + lo, 16)
    a1 = DyadicRational((3 << 16) + hi, 16)
    n = 24
    assert kn.twisted_cmp(kn.kneading(a0, n), kn.kneading(a1, n)) <= 0


def test_compare_reports_first_difference():
    a = DyadicRational.round(Fraction(39, 10), 64, "nearest")
    K = kn.kneading(a, 30)
    assert kn.compare(a, K) == (0, 30)
    T = K[:10] + ("L" if K[10] == "R" else "R") + K[11:]
    sign, idx = kn.compare(a, T)
    assert idx == 10 and sign in (-1, 1)
    assert sign == kn.twisted_cmp(K, T)


def test_window_certifies_common_prefix():
    w = kn.window(DyadicRational(7, 1), DyadicRational(31, 3), 32)
    assert w.lo < w.hi
    assert kn.kneading(w.lo, len(w.prefix)) == w.prefix
    assert kn.kneading(w.hi, len(w.prefix)) == w.prefix
    mid = (w.lo + w.hi).ldexp(-1)
    assert kn.kneading(mid, len(w.prefix)) == w.prefix
