"""Independent reference computations used by the tests."""
from fractions import Fraction

from logisticlab.measures import DiscreteMeasure
from logisticlab.numerics import DyadicRational


def random_measure(rng, max_atoms=10, exp=10):
    k = rng.randint(1, max_atoms)
    xs = rng.sample(range((1 << exp) + 1), k)
    ws = [rng.randint(1, 20) for _ in range(k)]
    tot = sum(ws)
    return DiscreteMeasure([(DyadicRational(x, exp), Fraction(w, tot)) for x, w in zip(xs, ws)])


def northwest_cost(mu, nu):
    """Cost of the monotone (north-west corner) coupling, built greedily from
    sorted atoms in exact arithmetic.  In one dimension it is optimal."""
    a = [[x.to_fraction(), w] for x, w in mu.atoms]
    b = [[x.to_fraction(), w] for x, w in nu.atoms]
    a.sort()
    b.sort()
    i = j = 0
    cost = Fraction(0)
    while i < len(a) and j < len(b):
        m = min(a[i][1], b[j][1])
        cost += m * abs(a[i][0] - b[j][0])
        a[i][1] -= m
        b[j][1] -= m
        if a[i][1] == 0:
            i += 1
        if b[j][1] == 0:
            j += 1
    return cost


def lp_cost(mu, nu):
    """Optimal transport cost from a generic LP solver (floating point)."""
    import numpy as np
    from scipy.optimize import linprog
    xa = [float(x) for x, _ in mu.atoms]
    wa = [float(w) for _, w in mu.atoms]
    xb = [float(x) for x, _ in nu.atoms]
    wb = [float(w) for _, w in nu.atoms]
    n, m = len(xa), len(xb)
    c = np.abs(np.subtract.outer(xa, xb)).ravel()
    A, b = [], []
    for i in range(n):
        row = np.zeros(n * m)
        row[i * m:(i + 1) * m] = 1
        A.append(row)
        b.append(wa[i])
    for j in range(m):
        row = np.zeros(n * m)
        row[j::m] = 1
        A.append(row)
        b.append(wb[j])
    res = linprog(c, A_eq=np.array(A), b_eq=np.array(b), bounds=(0, None), method="highs")
    return res.fun


def exact_orbit(a: Fraction, x: Fraction, n: int):
    out = [x]
    for _ in range(n):
        x = a * x * (1 - x)
        out.append(x)
    return out


def full_map_orbit_mean(n, seed, chunk=1_000_000):
    """Mean of an n-step orbit of x -> 4x(1-x) with no rounding drift.

    Uses x_k = sin^2(pi theta_k) where theta_k = 2^k theta_0 mod 1, so the
    orbit is read off a random binary expansion of theta_0.  A plain float
    loop is useless here: it falls onto the fixed point 0 and stays there.
    """
    import numpy as np
    from numpy.lib.stride_tricks import sliding_window_view
    rng = np.random.default_rng(seed)
    digits = rng.integers(0, 2, n + 52, dtype=np.uint8)
    weights = 2.0 ** -np.arange(1, 54)
    total = 0.0
    for c in range(0, n, chunk):
        m = min(chunk, n - c)
        theta = sliding_window_view(digits[c:c + m + 52], 53).astype(np.float64) @ weights
        total += float((np.sin(np.pi * theta) ** 2).sum())
    return total / n
