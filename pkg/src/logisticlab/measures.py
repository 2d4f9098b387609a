"""Finitely supported measures, empirical measures of orbits, exact
Wasserstein-1 distance and the piecewise-linear test-function family."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EnclosureBlowup, InvalidInput, SeparationImpossible
from .numerics import (DyadicInterval, DyadicRational, LazyParameter, as_fraction,
                       as_interval, f_step, mpz, param_interval)

POSITION_BITS = 64


# --------------------------------------------------------------------------
# discrete measures

class DiscreteMeasure:
    """Probability measure with finitely many atoms at dyadic positions.

    Internally all positions share one exponent and all weights share one
    denominator: atom i sits at nums[i] / 2**exp with weight counts[i] / den.
    """

    __slots__ = ("_nums", "_exp", "_counts", "_den", "meta")

    def __init__(self, atoms: Iterable, meta: Optional[dict] = None):
        pairs = [(DyadicRational.from_value(x), as_fraction(w)) for x, w in atoms]
        if not pairs:
            raise InvalidInput("a probability measure needs at least one atom")
        for x, w in pairs:
            if w <= 0:
                raise InvalidInput("atom weights must be positive")
            if x < 0 or x > 1:
                raise InvalidInput("atom positions must lie in [0, 1]")
        den = 1
        for _, w in pairs:
            den = den * w.denominator // gcd(den, w.denominator)
        exp = max(x.exp for x, _ in pairs)
        acc: Counter = Counter()
        for x, w in pairs:
            acc[x.num << (exp - x.exp)] += w.numerator * (den // w.denominator)
        if sum(acc.values()) != den:
            raise InvalidInput("weights must sum to exactly 1")
        self._set(acc, exp, meta)

    def _set(self, acc: dict, exp: int, meta):
        nums = sorted(acc)
        counts = [acc[k] for k in nums]
        g = 0
        for c in counts:
            g = gcd(g, c)
        if g > 1:
            counts = [c // g for c in counts]
        # shrink the common exponent while every position allows it
        if exp and nums:
            tz = min(((k & -k).bit_length() - 1) if k else exp for k in nums)
            s = min(tz, exp)
            if s:
                nums = [k >> s for k in nums]
                exp -= s
        self._nums = tuple(int(k) for k in nums)
        self._counts = tuple(int(c) for c in counts)
        self._den = sum(self._counts)
        self._exp = exp
        self.meta = dict(meta or {})

    @classmethod
    def from_counts(cls, counts: dict, exp: int, meta: Optional[dict] = None) -> "DiscreteMeasure":
        """Atoms at k / 2**exp with weight proportional to counts[k]."""
        if not counts:
            raise InvalidInput("empty measure")
        self = cls.__new__(cls)
        for k, c in counts.items():
            if c <= 0:
                raise InvalidInput("counts must be positive")
            if k < 0 or k > (1 << exp):
                raise InvalidInput("atom positions must lie in [0, 1]")
        self._set(dict(counts), exp, meta)
        return self

    @classmethod
    def uniform(cls, positions: Iterable, meta: Optional[dict] = None) -> "DiscreteMeasure":
        pts = [DyadicRational.from_value(x) for x in positions]
        if not pts:
            raise InvalidInput("empty measure")
        exp = max(p.exp for p in pts)
        return cls.from_counts(Counter(p.num << (exp - p.exp) for p in pts), exp, meta)

    @classmethod
    def point(cls, x, meta: Optional[dict] = None) -> "DiscreteMeasure":
        return cls.uniform([x], meta)

    # views --------------------------------------------------------------
    def __len__(self):
        return len(self._nums)

    @property
    def exponent(self) -> int:
        return self._exp

    @property
    def positions(self) -> list:
        return [DyadicRational(k, self._exp) for k in self._nums]

    @property
    def weights(self) -> list:
        return [Fraction(c, self._den) for c in self._counts]

    @property
    def atoms(self) -> list:
        return list(zip(self.positions, self.weights))

    def grid(self):
        """(nums, counts, exp, den) raw representation."""
        return self._nums, self._counts, self._exp, self._den

    def mean(self) -> Fraction:
        s = sum(k * c for k, c in zip(self._nums, self._counts))
        return Fraction(s, self._den << self._exp)

    def cdf(self, x) -> Fraction:
        x = as_fraction(x)
        s = 0
        for k, c in zip(self._nums, self._counts):
            if Fraction(k, 1 << self._exp) <= x:
                s += c
            else:
                break
        return Fraction(s, self._den)

    def rounded(self, bits: int) -> "DiscreteMeasure":
        """Positions rounded to the nearest multiple of 2**-bits (merging atoms)."""
        if bits >= self._exp:
            return self
        sh = self._exp - bits
        acc: Counter = Counter()
        for k, c in zip(self._nums, self._counts):
            acc[(k + (1 << (sh - 1))) >> sh] += c
        return DiscreteMeasure.from_counts(acc, bits, self.meta)

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.atoms == other.atoms

    def __hash__(self):
        return hash((self._nums, self._counts, self._exp))

    def __repr__(self):
        return f"DiscreteMeasure({len(self)} atoms)"

    def to_json(self) -> dict:
        return {
            "atoms": [{"x": DyadicRational(k, self._exp).to_json(), "w": f"{c // gcd(c, self._den)}/{self._den // gcd(c, self._den)}"}
                      for k, c in zip(self._nums, self._counts)],
            "meta": _jsonable(self.meta),
        }

    @classmethod
    def from_json(cls, d) -> "DiscreteMeasure":
        atoms = [(DyadicRational.from_json(a["x"]), Fraction(a["w"])) for a in d["atoms"]]
        return cls(atoms, d.get("meta"))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (DyadicRational, DyadicInterval)):
        return v.to_json()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def w1(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Fraction:
    """Exact Wasserstein-1 distance as the L1 distance between the CDFs."""
    an, ac, ae, ad = mu.grid()
    bn, bc, be, bd = nu.grid()
    e = max(ae, be)
    sa, sb = e - ae, e - be
    i = j = 0
    fa = fb = 0  # cumulative counts
    total = 0
    prev = None
    na, nb = len(an), len(bn)
    while i < na or j < nb:
        xa = an[i] << sa if i < na else None
        xb = bn[j] << sb if j < nb else None
        if xb is None or (xa is not None and xa <= xb):
            x = xa
        else:
            x = xb
        if prev is not None:
            total += (x - prev) * abs(fa * bd - fb * ad)
        while i < na and (an[i] << sa) == x:
            fa += ac[i]
            i += 1
        while j < nb and (bn[j] << sb) == x:
            fb += bc[j]
            j += 1
        prev = x
    return Fraction(total, (ad * bd) << e)


# --------------------------------------------------------------------------
# test functions

def _frac(v) -> Fraction:
    return as_fraction(v)


@dataclass(frozen=True)
class TestFunction:
    """Continuous piecewise-linear function, constant outside its breakpoints."""

    __test__ = False  # not a pytest class

    breakpoints: tuple
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        bps = tuple((_frac(x), _frac(y)) for x, y in self.breakpoints)
        if not bps:
            raise InvalidInput("a test function needs at least one breakpoint")
        for (x0, _), (x1, _) in zip(bps, bps[1:]):
            if not x0 < x1:
                raise InvalidInput("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def constant(cls, c=1) -> "TestFunction":
        return cls(((Fraction(0), _frac(c)), (Fraction(1), _frac(c))))

    @classmethod
    def trapezoid(cls, a, b, c, d, height=1) -> "TestFunction":
        a, b, c, d, h = map(_frac, (a, b, c, d, height))
        if not (a < b <= c < d):
            raise InvalidInput("trapezoid needs a < b <= c < d")
        pts = [(a, 0), (b, h)] + ([(c, h)] if c > b else []) + [(d, 0)]
        return cls(tuple(pts))

    def __call__(self, x) -> Fraction:
        x = _frac(x)
        bps = self.breakpoints
        if x <= bps[0][0]:
            return bps[0][1]
        if x >= bps[-1][0]:
            return bps[-1][1]
        lo, hi = 0, len(bps) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if bps[mid][0] <= x:
                lo = mid
            else:
                hi = mid
        (x0, y0), (x1, y1) = bps[lo], bps[hi]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    @property
    def lipschitz(self) -> Fraction:
        bps = self.breakpoints
        return max((abs((y1 - y0) / (x1 - x0)) for (x0, y0), (x1, y1) in zip(bps, bps[1:])),
                   default=Fraction(0))

    def _combine(self, other: "TestFunction", alpha, beta) -> "TestFunction":
        xs = sorted({x for x, _ in self.breakpoints} | {x for x, _ in other.breakpoints})
        return TestFunction(tuple((x, alpha * self(x) + beta * other(x)) for x in xs)).simplified()

    def __add__(self, other):
        return self._combine(other, 1, 1)

    def __sub__(self, other):
        return self._combine(other, 1, -1)

    def __mul__(self, c):
        c = _frac(c)
        return TestFunction(tuple((x, c * y) for x, y in self.breakpoints))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def simplified(self) -> "TestFunction":
        """Drop breakpoints that lie on the line through their neighbours."""
        bps = list(self.breakpoints)
        out = [bps[0]]
        for k in range(1, len(bps) - 1):
            (x0, y0), (x1, y1), (x2, y2) = out[-1], bps[k], bps[k + 1]
            if (y1 - y0) * (x2 - x1) != (y2 - y1) * (x1 - x0):
                out.append(bps[k])
        if len(bps) > 1:
            out.append(bps[-1])
        return TestFunction(tuple(out), self.meta)

    def canonical(self):
        """Canonical form of the restriction to [0, 1]: value and slope at 0
        plus the (position, slope change) pairs of interior kinks."""
        return _kink_form(self)

    def to_json(self) -> dict:
        return {"breakpoints": [[_fstr(x), _fstr(y)] for x, y in self.breakpoints],
                "meta": _jsonable(self.meta)}

    @classmethod
    def from_json(cls, d) -> "TestFunction":
        return cls(tuple((Fraction(x), Fraction(y)) for x, y in d["breakpoints"]), d.get("meta", {}))


def _fstr(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def _kink_form(tau: TestFunction):
    zero, one = Fraction(0), Fraction(1)
    xs = sorted({zero, one} | {x for x, _ in tau.breakpoints if zero < x < one})
    vals = [tau(x) for x in xs]
    slopes = [(v1 - v0) / (x1 - x0) for (x0, v0), (x1, v1) in zip(zip(xs, vals), zip(xs[1:], vals[1:]))]
    kinks = []
    for k in range(1, len(xs) - 1):
        d = slopes[k] - slopes[k - 1]
        if d:
            kinks.append((xs[k], d))
    return vals[0], slopes[0], tuple(kinks)


def integrate(tau: TestFunction, mu: DiscreteMeasure) -> Fraction:
    """Exact integral of tau against a discrete measure."""
    nums, counts, exp, den = mu.grid()
    bps = tau.breakpoints
    scale = 1 << exp
    total = Fraction(0)
    j = 0
    nb = len(bps)
    # walk atoms (ascending) alongside breakpoints
    acc_const: dict = {}
    for k, c in zip(nums, counts):
        x = Fraction(k, scale)
        while j < nb and bps[j][0] <= x:
            j += 1
        if j == 0:
            acc_const[0] = acc_const.get(0, 0) + c
        elif j == nb:
            acc_const[nb] = acc_const.get(nb, 0) + c
        else:
            (x0, y0), (x1, y1) = bps[j - 1], bps[j]
            if y0 == y1:
                acc_const[(j, 0)] = acc_const.get((j, 0), 0) + c
            else:
                total += c * (y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    for key, c in acc_const.items():
        if key == 0:
            total += c * bps[0][1]
        elif key == nb:
            total += c * bps[-1][1]
        else:
            total += c * bps[key[0] - 1][1]
    return total / den


def mass_near(mu: DiscreteMeasure, points: Iterable[DyadicInterval], radius) -> Fraction:
    """mu-mass of the union of the enclosures fattened by ``radius``."""
    r = as_fraction(radius)
    ivs = sorted((p.lo.to_fraction() - r, p.hi.to_fraction() + r) for p in points)
    merged = []
    for lo, hi in ivs:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    nums, counts, exp, den = mu.grid()
    scale = 1 << exp
    s = 0
    j = 0
    for k, c in zip(nums, counts):
        x = Fraction(k, scale)
        while j < len(merged) and merged[j][1] < x:
            j += 1
        if j == len(merged):
            break
        if merged[j][0] <= x:
            s += c
    return Fraction(s, den)


# --------------------------------------------------------------------------
# effective enumeration of the test-function family
#
# Scheme "tau-kink-v1": on [0, 1] every continuous piecewise-linear function
# with rational data is uniquely  alpha + beta*x + sum_j sigma_j*max(0, x - t_j)
# with distinct kinks t_j in (0, 1) and sigma_j != 0.  Index i >= 1 is decoded
# bijectively into (alpha, beta, [(t_j, sigma_j)]) through bit interleaving,
# a 2-adic pairing and continued fractions, so every function of the family
# has exactly one index.

TAU_SCHEME = "tau-kink-v1"


def _pair2(m: int, z: int) -> int:
    return ((2 * z + 1) << m) - 1


def _unpair2(k: int):
    k += 1
    m = (k & -k).bit_length() - 1
    return m, (k >> m) >> 1


def _interleave(xs: Sequence[int]) -> int:
    d = len(xs)
    if d == 1:
        return xs[0]
    width = max(x.bit_length() for x in xs)
    out = 0
    for b in range(width):
        for i, x in enumerate(xs):
            if (x >> b) & 1:
                out |= 1 << (b * d + i)
    return out


def _deinterleave(z: int, d: int) -> list:
    if d == 1:
        return [z]
    xs = [0] * d
    b = 0
    while z:
        for i in range(d):
            if z & 1:
                xs[i] |= 1 << b
            z >>= 1
        b += 1
    return xs


def _seq_encode(xs: Sequence[int]) -> int:
    if not xs:
        return 0
    return 1 + _pair2(len(xs) - 1, _interleave(xs))


def _seq_decode(k: int) -> list:
    if k == 0:
        return []
    m, z = _unpair2(k - 1)
    return _deinterleave(z, m + 1)


def _cf(f: Fraction) -> list:
    p, q = f.numerator, f.denominator
    out = []
    while q:
        a, r = divmod(p, q)
        out.append(a)
        p, q = q, r
    return out


def _from_cf(cf: Sequence[int]) -> Fraction:
    v = Fraction(cf[-1])
    for a in reversed(cf[:-1]):
        v = a + 1 / v
    return v


def _posrat_index(f: Fraction) -> int:
    cf = _cf(f)
    if len(cf) == 1:
        seq = [cf[0] - 1]
    else:
        seq = [cf[0]] + [a - 1 for a in cf[1:-1]] + [cf[-1] - 2]
    return _seq_encode(seq) - 1


def _posrat(k: int) -> Fraction:
    seq = _seq_decode(k + 1)
    if len(seq) == 1:
        return Fraction(seq[0] + 1)
    return _from_cf([seq[0]] + [s + 1 for s in seq[1:-1]] + [seq[-1] + 2])


def _rat(k: int) -> Fraction:
    if k == 0:
        return Fraction(0)
    p = _posrat((k - 1) >> 1)
    return p if k & 1 else -p


def _rat_index(f: Fraction) -> int:
    if f == 0:
        return 0
    return 2 * _posrat_index(abs(f)) + (1 if f > 0 else 2)


def _ratA(k: int) -> Fraction:
    return _rat(1 - k) if k < 2 else _rat(k)


def _ratA_index(f: Fraction) -> int:
    k = _rat_index(f)
    return 1 - k if k < 2 else k


def _nzrat(k: int) -> Fraction:
    p = _posrat(k >> 1)
    return -p if k & 1 else p


def _nzrat_index(f: Fraction) -> int:
    return 2 * _posrat_index(abs(f)) + (1 if f < 0 else 0)


def _unit(k: int) -> Fraction:
    r = _posrat(k)
    return r / (1 + r)


def _unit_index(t: Fraction) -> int:
    return _posrat_index(t / (1 - t))


def _tau_from_code(alpha: Fraction, beta: Fraction, kinks) -> TestFunction:
    xs = [Fraction(0)] + [t for t, _ in kinks] + [Fraction(1)]

    def val(x):
        return alpha + beta * x + sum(s * (x - t) for t, s in kinks if x > t)

    return TestFunction(tuple((x, val(x)) for x in xs), {"scheme": TAU_SCHEME})


def enumerate_tau(i: int) -> TestFunction:
    """The i-th test function (i >= 1); i = 1 is the constant 1."""
    if i < 1:
        raise InvalidInput("tau index must be positive")
    ia, ib, ik = _deinterleave(i - 1, 3)
    alpha, beta = _ratA(ia), _rat(ib)
    kinks = []
    t = Fraction(0)
    for e in _seq_decode(ik):
        s_idx, g_idx = _deinterleave(e, 2)
        t = t + (1 - t) * _unit(s_idx)
        kinks.append((t, _nzrat(g_idx)))
    tau = _tau_from_code(alpha, beta, kinks)
    tau.meta["index"] = str(i)
    return tau


def tau_index(tau: TestFunction) -> int:
    """Index of tau's restriction to [0, 1] in the enumeration."""
    alpha, beta, kinks = _kink_form(tau)
    elems = []
    prev = Fraction(0)
    for t, s in kinks:
        elems.append(_interleave([_unit_index((t - prev) / (1 - prev)), _nzrat_index(s)]))
        prev = t
    return _interleave([_ratA_index(alpha), _rat_index(beta), _seq_encode(elems)]) + 1


# --------------------------------------------------------------------------
# separating test functions

def separating_tau(a, target_n: int, avoid_range=(1, 10), bits: int = 64, *,
                   avoid_extra: Iterable[int] = (), geometry=None) -> TestFunction:
    """Sum of height-1 trapezoid bumps around the points of Per_a(target_n).

    The bump supports are certifiably disjoint from every Per_a(j) with
    j_lo < j < j_hi (j != target_n) and from each other.  Radii are powers of
    two: the outer radius is the largest one that keeps the supports clear,
    the plateau radius is half of it.
    """
    from .dynamics import cached_orbit, solve_stage

    j_lo, j_hi = avoid_range
    avoid = sorted(({j for j in range(j_lo + 1, j_hi)} | set(avoid_extra)) - {target_n})
    geo = geometry or solve_stage(a, bits + 40)
    target = cached_orbit(a, target_n, bits, geo)
    others = []
    for j in avoid:
        others.extend(cached_orbit(a, j, bits, geo).f_points)
    pts = sorted(target.f_points, key=lambda p: p.lo)
    gaps = []
    for p in pts:
        gaps.append(p.lo.to_fraction())
        gaps.append(1 - p.hi.to_fraction())
        for q in others:
            if q.overlaps(p):
                raise SeparationImpossible(f"orbit enclosures overlap near {float(p.lo):.6f}")
            gaps.append((q.lo - p.hi).to_fraction() if q.lo > p.hi else (p.lo - q.hi).to_fraction())
    for p, q in zip(pts, pts[1:]):
        gaps.append((q.lo - p.hi).to_fraction() / 2)
    g = min(gaps)
    if g <= 0:
        raise SeparationImpossible("no room for a separating bump")
    e = 1
    while Fraction(1, 1 << e) * 2 >= g:
        e += 1
    while True:
        rho = Fraction(1, 1 << e)
        centers = [DyadicRational.round(p.mid, bits, "nearest").to_fraction() for p in pts]
        ok = all(c - rho / 2 <= p.lo.to_fraction() and p.hi.to_fraction() <= c + rho / 2
                 for c, p in zip(centers, pts))
        if not ok:
            raise SeparationImpossible("bump plateau cannot cover the orbit enclosure")
        clear = all(not (c - rho <= q.hi.to_fraction() and q.lo.to_fraction() <= c + rho)
                    for c in centers for q in others)
        apart = all(c1 + rho < c2 - rho for c1, c2 in zip(centers, centers[1:]))
        inside = all(c - rho >= 0 and c + rho <= 1 for c in centers)
        if clear and apart and inside:
            break
        e += 1
        if e > bits - 4:
            raise SeparationImpossible("separating radius below working precision")
    bps = []
    for c in centers:
        bps += [(c - rho, 0), (c - rho / 2, 1), (c + rho / 2, 1), (c + rho, 0)]
    return TestFunction(tuple(bps), {"target": target_n, "avoid": list(avoid),
                                     "radius_out": rho, "radius_in": rho / 2, "scheme": TAU_SCHEME})


# --------------------------------------------------------------------------
# empirical measures

def _point_interval(x, w: int):
    if isinstance(x, DyadicInterval):
        return x.fixed(w)
    f = as_fraction(x)
    if f < 0 or f > 1:
        raise InvalidInput("initial point must lie in [0, 1]")
    return DyadicInterval.enclosing(f, w).fixed(w)


def orbit_positions(a, x, n: int, *, start: int = 0, position_bits: int = POSITION_BITS,
                    work_bits: Optional[int] = None, max_width_bits: Optional[int] = None):
    """Rounded midpoints (integers at scale 2**position_bits) of the certified
    orbit points f^k(x) for k = start .. start+n-1, plus metadata.

    The working precision starts well below the worst-case 2n+64 and doubles
    whenever an enclosure gets wider than 2**-max_width_bits, up to
    2(start+n)+64; past that it grows by 64 bits at a time as long as the
    parameter enclosure is narrow enough to make more bits useful.
    """
    steps = start + n
    cap = 2 * steps + 64
    mwb = position_bits - 8 if max_width_bits is None else max_width_bits
    w = work_bits or min(cap, position_bits + 64)
    while True:
        a_iv = param_interval(a, w)
        al, ah = (mpz(v) for v in a_iv.fixed(w))
        xl, xh = (mpz(v) for v in _point_interval(x, w))
        lim = mpz(1) << max(w - mwb, 0)
        sh = w - position_bits
        out = []
        maxw = 0
        blown = False
        for k in range(steps):
            if k >= start:
                if xh - xl > maxw:
                    maxw = xh - xl
                out.append(int((xl + xh + (mpz(1) << sh)) >> (sh + 1)) if sh >= 0 else int(xl + xh) << (-sh - 1))
            if xh - xl > lim:
                blown = True
                break
            xl, xh = f_step(al, ah, xl, xh, w)
        if not blown:
            meta = {"engine": "certified", "work_bits": w,
                    "max_width": DyadicRational(int(maxw), w), "position_bits": position_bits}
            return out, meta
        if w >= cap or work_bits is not None:
            if (a_iv.width.to_fraction() * (1 << mwb)) > Fraction(1, 1 << 8):
                raise EnclosureBlowup("parameter enclosure too wide for the requested orbit length")
            if work_bits is not None:
                raise EnclosureBlowup(f"orbit enclosure too wide at {w} working bits")
            # at the worst-case bound the width is certainly acceptable
            w = cap + 64
            cap = w
            continue
        w = min(cap, 2 * w)


def birkhoff_measure(a, x, n: int, *, position_bits: int = POSITION_BITS,
                     work_bits: Optional[int] = None) -> DiscreteMeasure:
    """Empirical measure (1/n) sum_{k<n} delta_{f^k x} of a certified orbit."""
    if n < 1:
        raise InvalidInput("n must be positive")
    pos, meta = orbit_positions(a, x, n, position_bits=position_bits, work_bits=work_bits)
    meta.update({"kind": "birkhoff", "n": n})
    return DiscreteMeasure.from_counts(Counter(pos), position_bits, meta)


def _start_points(k: int, seed: int) -> list:
    children = np.random.SeedSequence(seed).spawn(k)
    return [DyadicRational(int(np.random.default_rng(c).integers(0, 1 << 53, dtype=np.uint64)), 53)
            for c in children]


def monte_carlo_measure(a, k: int, n: int, seed: int = 0, *, engine: str = "auto",
                        position_bits: Optional[int] = None, grid_bits: int = 20) -> DiscreteMeasure:
    """Ensemble measure (1/kn) sum_l sum_{m=1..n} delta_{f^m x_l}.

    Starting points are 53-bit dyadics drawn from independent child streams of
    one seed.  engine="certified" uses enclosures; engine="float" runs a
    vectorised double-precision orbit quantised to a 2**-grid_bits grid and is
    marked uncertified; "auto" picks float when k*n > 200000.
    """
    if k < 1 or n < 1:
        raise InvalidInput("k and n must be positive")
    starts = _start_points(k, seed)
    if engine == "auto":
        engine = "float" if k * n > 200_000 else "certified"
    meta = {"kind": "monte_carlo", "k": k, "n": n, "seed": seed, "engine": engine}
    if engine == "certified":
        pb = position_bits or POSITION_BITS
        acc: Counter = Counter()
        maxw = DyadicRational(0)
        for x0 in starts:
            pos, m = orbit_positions(a, x0, n, start=1, position_bits=pb)
            acc.update(pos)
            maxw = max(maxw, m["max_width"])
        meta.update({"certified": True, "max_width": maxw, "position_bits": pb})
        return DiscreteMeasure.from_counts(acc, pb, meta)
    if engine != "float":
        raise InvalidInput(f"unknown engine {engine!r}")
    af = float(param_interval(a, 64).mid)
    x = np.array([float(s) for s in starts], dtype=np.float64)
    scale = float(1 << grid_bits)
    counts = np.zeros((1 << grid_bits) + 1, dtype=np.int64)
    chunk = max(1, 2_000_000 // k)
    buf = np.empty((min(chunk, n), k), dtype=np.int64)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        for t in range(m):
            x = af * x * (1.0 - x)
            buf[t] = np.rint(x * scale)
        counts += np.bincount(buf[:m].ravel(), minlength=counts.size)
        done += m
    nz = np.nonzero(counts)[0]
    # float orbits at a = 4 can be absorbed by the fixed point 0 through rounding
    absorbed = int(np.count_nonzero(x == 0.0))
    meta.update({"certified": False, "a_float": af, "grid_bits": grid_bits, "absorbed": absorbed})
    return DiscreteMeasure.from_counts({int(i): int(counts[i]) for i in nz}, grid_bits, meta)


# --------------------------------------------------------------------------
# convergence diagnostic

@dataclass
class ConvergenceReport:
    checkpoints: list  # (n, W1 to previous checkpoint)
    verdict: str
    tol: Fraction
    final: Optional[DiscreteMeasure] = None

    def to_json(self) -> dict:
        return {"checkpoints": [[n, _jsonable(d)] for n, d in self.checkpoints],
                "verdict": self.verdict, "tol": _jsonable(self.tol),
                "final": self.final.to_json() if self.final is not None else None}


def omega_diagnostic(a, x, schedule: Sequence[int], tol, *,
                     position_bits: int = POSITION_BITS) -> ConvergenceReport:
    """Successive W1 gaps of Birkhoff measures along an increasing schedule."""
    sched = [int(n) for n in schedule]
    if not sched or any(b <= a_ for a_, b in zip(sched, sched[1:])) or sched[0] < 1:
        raise InvalidInput("schedule must be a nonempty increasing list of positive integers")
    tol = as_fraction(tol)
    pos, _ = orbit_positions(a, x, sched[-1], position_bits=position_bits)
    measures = []
    acc: Counter = Counter()
    done = 0
    for n in sched:
        acc.update(pos[done:n])
        done = n
        measures.append(DiscreteMeasure.from_counts(acc, position_bits))
    gaps = [(n, w1(m1, m0)) for n, m0, m1 in zip(sched[1:], measures, measures[1:])]
    tail = gaps[len(gaps) // 2:]
    verdict = "converged" if tail and all(d < tol for _, d in tail) else "inconclusive"
    return ConvergenceReport(gaps, verdict, tol, measures[-1])
