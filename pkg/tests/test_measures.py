import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from logisticlab.dynamics import cached_orbit, lambda_measure
from logisticlab.errors import InvalidInput
from logisticlab.measures import (DiscreteMeasure, TestFunction, birkhoff_measure, enumerate_tau,
                                  integrate, mass_near, monte_carlo_measure, omega_diagnostic,
                                  separating_tau, tau_index, w1)
from logisticlab.numerics import DyadicRational

from oracles import lp_cost, northwest_cost, random_measure

seeds = st.integers(0, 2**32)


def _pair(seed):
    rng = random.Random(seed)
    return random_measure(rng), random_measure(rng), random_measure(rng)


@given(seeds)
def test_w1_metric_axioms(seed):
    a, b, c = _pair(seed)
    assert w1(a, a) == 0
    assert w1(a, b) == w1(b, a)
    assert w1(a, c) <= w1(a, b) + w1(b, c)
    assert (w1(a, b) == 0) == (a == b)


@given(seeds)
def test_w1_matches_monotone_coupling(seed):
    a, b, _ = _pair(seed)
    assert w1(a, b) == northwest_cost(a, b)


def test_w1_matches_linear_program():
    rng = random.Random(7)
    for _ in range(40):
        a, b = random_measure(rng, 6), random_measure(rng, 6)
        assert float(w1(a, b)) == pytest.approx(lp_cost(a, b), abs=1e-9)


def test_w1_of_point_masses():
    d0 = DiscreteMeasure.point(0)
    d1 = DiscreteMeasure.point(1)
    assert w1(d0, d1) == 1
    assert w1(DiscreteMeasure.uniform([DyadicRational(1, 2), DyadicRational(3, 2)]),
              DiscreteMeasure.point(DyadicRational(1, 1))) == Fraction(1, 4)


def test_measure_validation_and_json():
    with pytest.raises(InvalidInput):
        DiscreteMeasure([(0, Fraction(1, 2))])
    with pytest.raises(InvalidInput):
        DiscreteMeasure([(2, 1)])
    mu = DiscreteMeasure([(DyadicRational(1, 3), Fraction(1, 3)), (DyadicRational(5, 3), Fraction(2, 3))])
    assert DiscreteMeasure.from_json(mu.to_json()) == mu
    assert mu.mean() == Fraction(1, 24) + Fraction(5, 12)


@given(seeds)
def test_integrate_matches_pointwise_sum(seed):
    rng = random.Random(seed)
    mu = random_measure(rng)
    xs = sorted(rng.sample(range(1, 1000), 4))
    tau = TestFunction(tuple((Fraction(x, 1000), Fraction(rng.randint(-5, 5), 3)) for x in xs))
    direct = sum(w * tau(x.to_fraction()) for x, w in mu.atoms)
    assert integrate(tau, mu) == direct


def test_trapezoid_shape():
    t = TestFunction.trapezoid(Fraction(1, 4), Fraction(3, 8), Fraction(5, 8), Fraction(3, 4))
    assert t(Fraction(1, 2)) == 1 and t(0) == 0 and t(1) == 0
    assert t(Fraction(5, 16)) == Fraction(1, 2)
    assert t.lipschitz == 8


def test_enumeration_starts_with_constant():
    one = enumerate_tau(1)
    assert all(one(Fraction(k, 7)) == 1 for k in range(8))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10**30))
def test_tau_index_round_trip(i):
    assert tau_index(enumerate_tau(i)) == i


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 999), st.integers(-20, 20)), min_size=1, max_size=5, unique_by=lambda t: t[0]))
def test_every_function_has_an_index(pts):
    pts = sorted(pts)
    tau = TestFunction(tuple((Fraction(x, 1000), Fraction(y, 7)) for x, y in pts))
    back = enumerate_tau(tau_index(tau))
    for k in range(0, 1001, 37):
        assert back(Fraction(k, 1000)) == tau(Fraction(k, 1000))


def test_separating_tau_sees_only_its_orbit():
    a = Fraction(39, 10)
    tau = separating_tau(a, 3, (0, 12))
    assert integrate(tau, lambda_measure(a, 3)) == 1
    for j in [1, 2, 4, 5, 6, 7, 8, 9, 10, 11]:
        assert integrate(tau, lambda_measure(a, j)) == 0
    assert enumerate_tau(tau_index(tau)).canonical() == tau.canonical()


def test_mass_near():
    a = Fraction(39, 10)
    pts = cached_orbit(a, 1).f_points
    lam = lambda_measure(a, 1)
    assert mass_near(lam, pts, Fraction(1, 1024)) == 1
    assert mass_near(lam, cached_orbit(a, 2).f_points, Fraction(1, 1024)) == 0


def test_birkhoff_measure_settles_on_attracting_cycle():
    # at a = 3.5 every typical orbit is attracted to a 4-cycle
    mu = birkhoff_measure(Fraction(7, 2), Fraction(1, 3), 4000)
    rep = omega_diagnostic(Fraction(7, 2), Fraction(1, 3), [250, 500, 1000, 2000, 4000], Fraction(1, 100))
    assert rep.verdict == "converged"
    assert 0.4 < float(mu.mean()) < 0.7


def test_monte_carlo_is_seeded():
    m1 = monte_carlo_measure(Fraction(39, 10), 3, 200, seed=9, engine="certified")
    m2 = monte_carlo_measure(Fraction(39, 10), 3, 200, seed=9, engine="certified")
    m3 = monte_carlo_measure(Fraction(39, 10), 3, 200, seed=10, engine="certified")
    assert m1 == m2 and m1 != m3
    assert m1.meta["certified"] is True
    f = monte_carlo_measure(4, 10, 30_000, seed=1)
    assert f.meta["engine"] == "float" and f.meta["certified"] is False
