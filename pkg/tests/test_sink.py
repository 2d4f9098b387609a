from fractions import Fraction

import mpmath
import pytest

from logisticlab.errors import InvalidInput, NoSignChange
from logisticlab.numerics import DyadicInterval, DyadicRational
from logisticlab.sink import certify_sink, closure_residual, find_superattracting


def iv(lo, hi):
    # round inward so the window stays inside the decimal one
    return DyadicInterval(DyadicRational.round(lo, 64, "ceil"), DyadicRational.round(hi, 64, "floor"))


def test_period_one_is_exact():
    a = find_superattracting(iv("1.5", "2.5"), 1, 60)
    assert a.is_point() and a.lo == 2
    assert closure_residual(a, 1) == 0


def test_period_two_is_one_plus_root_five():
    a = find_superattracting(iv(3, 4), 2, 48)
    mpmath.mp.prec = 120
    root = 1 + mpmath.sqrt(5)
    lo = mpmath.mpf(a.lo.num) / 2 ** a.lo.exp
    hi = mpmath.mpf(a.hi.num) / 2 ** a.hi.exp
    assert lo <= root <= hi
    assert a.width_le_pow2(48)


def test_period_three_against_polynomial():
    a = find_superattracting(iv("3.8", "3.9"), 3, 53)
    # superstable period 3: f^3(1/2) = 1/2; compare with a high precision root
    mpmath.mp.prec = 200
    h = lambda s: (lambda x: s * x * (1 - x))((lambda x: s * x * (1 - x))((lambda x: s * x * (1 - x))(mpmath.mpf(1) / 2))) - mpmath.mpf(1) / 2
    root = mpmath.findroot(h, mpmath.mpf("3.83"))
    assert float(a.mid) == pytest.approx(float(root), abs=2 ** -50)
    assert closure_residual(a, 3) < Fraction(1, 1 << 40)


def test_no_sign_change_reported():
    with pytest.raises(NoSignChange):
        find_superattracting(iv("3.0", "3.1"), 1, 30)
    with pytest.raises(InvalidInput):
        find_superattracting(iv(3, 4), 0, 30)


def test_sink_certificate_at_three_point_two():
    cert = certify_sink(Fraction(16, 5), samples=10, seed=1, schedule=(100, 1000))
    assert cert.period == 2
    # multiplier of the 2-cycle at a = 3.2 is 4 + 2a - a^2 = 0.16
    assert cert.multiplier.lo <= Fraction(4, 25) <= cert.multiplier.hi
    assert cert.multiplier.width_le_pow2(40)
    assert cert.basin_fraction() == 1
    assert sum(cert.sink_measure.weights) == 1


def test_sink_certificate_at_superstable_parameter():
    a = find_superattracting(iv("3.8", "3.9"), 3, 53)
    cert = certify_sink(a, samples=4, seed=3, schedule=(100, 2000))
    assert cert.period == 3
    assert cert.multiplier.lo == 0
    assert cert.to_json()["meta"]["period"] == 3
