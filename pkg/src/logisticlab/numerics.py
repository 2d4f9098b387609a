"""Certified arithmetic: dyadic rationals, outward-rounded intervals, the
parameter oracle and monotone bisection.

Hot loops work on fixed-point integers at a scale 2**W (``W`` = working
bits).  Lower ends are rounded down and upper ends up, so every interval
produced here contains the exact image of its input.
"""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

try:  # faster big integers when available
    from gmpy2 import mpz
except ImportError:  # pragma: no cover
    mpz = int

from .errors import (EnclosureBlowup, FrozenPrefixViolation, InvalidInput,
                     MonotonicityViolation, NoSignChange, RefinementExhausted,
                     Undecidable)

Number = Union[int, Fraction, "DyadicRational", str, float]


def _parse_fraction(s: str) -> Fraction:
    s = s.strip()
    if "/2^" in s:
        p, e = s.split("/2^")
        return Fraction(int(p), 1 << int(e))
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInput(f"cannot parse number {s!r}") from exc


def as_fraction(v: Number) -> Fraction:
    if isinstance(v, DyadicRational):
        return v.to_fraction()
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v)
    if isinstance(v, str):
        return _parse_fraction(v)
    raise InvalidInput(f"not a number: {v!r}")


class DyadicRational:
    """Exact value ``num / 2**exp`` kept in canonical form."""

    __slots__ = ("num", "exp")

    def __init__(self, num: int = 0, exp: int = 0):
        num = int(num)
        exp = int(exp)
        if exp < 0:
            num <<= -exp
            exp = 0
        if num == 0:
            exp = 0
        elif exp:
            tz = (num & -num).bit_length() - 1
            s = tz if tz < exp else exp
            if s:
                num >>= s
                exp -= s
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicRational is immutable")

    # construction -------------------------------------------------------
    @classmethod
    def from_value(cls, v: Number) -> "DyadicRational":
        if isinstance(v, DyadicRational):
            return v
        if isinstance(v, int):
            return cls(v, 0)
        f = as_fraction(v)
        d = f.denominator
        if d & (d - 1):
            raise InvalidInput(f"{v!r} is not a dyadic rational")
        return cls(f.numerator, d.bit_length() - 1)

    @classmethod
    def round(cls, v: Number, exp: int, mode: str = "floor") -> "DyadicRational":
        """Round ``v`` to a multiple of 2**-exp."""
        if isinstance(v, DyadicRational) and v.exp <= exp:
            return v
        f = as_fraction(v) * (1 << exp)
        if mode == "floor":
            k = f.numerator // f.denominator
        elif mode == "ceil":
            k = -((-f.numerator) // f.denominator)
        elif mode == "nearest":
            k = (2 * f.numerator + f.denominator) // (2 * f.denominator)
        else:
            raise InvalidInput(f"unknown rounding mode {mode!r}")
        return cls(k, exp)

    # conversions --------------------------------------------------------
    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def scaled(self, w: int, mode: str = "floor") -> int:
        """Integer k with k/2**w the floor (or ceiling) of this value."""
        if w >= self.exp:
            return self.num << (w - self.exp)
        if mode == "floor":
            return self.num >> (self.exp - w)
        return -((-self.num) >> (self.exp - w))

    def decimal(self) -> str:
        """Exact decimal expansion (always finite for dyadics)."""
        if self.exp == 0:
            return str(self.num)
        sign = "-" if self.num < 0 else ""
        digits = str(abs(self.num) * 5 ** self.exp).rjust(self.exp + 1, "0")
        return f"{sign}{digits[:-self.exp]}.{digits[-self.exp:]}"

    def to_json(self) -> dict:
        return {"num": str(self.num), "exp": self.exp}

    @classmethod
    def from_json(cls, d) -> "DyadicRational":
        if isinstance(d, dict):
            return cls(int(d["num"]), int(d["exp"]))
        return cls.from_value(d)

    # arithmetic ---------------------------------------------------------
    def _align(self, other: "DyadicRational"):
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp), e

    def __add__(self, other):
        if isinstance(other, int):
            other = DyadicRational(other)
        if isinstance(other, DyadicRational):
            a, b, e = self._align(other)
            return DyadicRational(a + b, e)
        if isinstance(other, Fraction):
            return self.to_fraction() + other
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return DyadicRational(-self.num, self.exp)

    def __sub__(self, other):
        if isinstance(other, (int, DyadicRational)):
            return self + (-DyadicRational.from_value(other))
        if isinstance(other, Fraction):
            return self.to_fraction() - other
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return DyadicRational(self.num * other, self.exp)
        if isinstance(other, DyadicRational):
            return DyadicRational(self.num * other.num, self.exp + other.exp)
        if isinstance(other, Fraction):
            return self.to_fraction() * other
        return NotImplemented

    __rmul__ = __mul__

    def __abs__(self):
        return DyadicRational(abs(self.num), self.exp)

    def ldexp(self, k: int) -> "DyadicRational":
        """Multiply by 2**k exactly."""
        return DyadicRational(self.num, self.exp - k)

    # comparisons --------------------------------------------------------
    def _cmp(self, other) -> int:
        if isinstance(other, DyadicRational):
            a, b, _ = self._align(other)
        elif isinstance(other, int):
            a, b = self.num, other << self.exp
        else:
            f = as_fraction(other)
            a, b = self.num * f.denominator, f.numerator << self.exp
        return (a > b) - (a < b)

    def __eq__(self, other):
        if isinstance(other, DyadicRational):
            return self.num == other.num and self.exp == other.exp
        if isinstance(other, (int, Fraction)):
            return self._cmp(other) == 0
        return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash(self.to_fraction())

    def __repr__(self):
        return f"DyadicRational({self.num}, {self.exp})"

    def __str__(self):
        if self.exp > 256:
            return f"{self.num}/2^{self.exp}"
        return self.decimal()


def dyadic(v: Number) -> DyadicRational:
    return DyadicRational.from_value(v)


class DyadicInterval:
    """Closed interval ``[lo, hi]`` with dyadic endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Number, hi: Optional[Number] = None):
        lo = DyadicRational.from_value(lo)
        hi = lo if hi is None else DyadicRational.from_value(hi)
        if hi < lo:
            raise InvalidInput(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicInterval is immutable")

    @classmethod
    def enclosing(cls, v: Number, bits: int) -> "DyadicInterval":
        """Tightest interval with 2**-bits grid endpoints around ``v``."""
        if isinstance(v, DyadicInterval):
            return cls(DyadicRational.round(v.lo, bits, "floor"),
                       DyadicRational.round(v.hi, bits, "ceil"))
        return cls(DyadicRational.round(v, bits, "floor"),
                   DyadicRational.round(v, bits, "ceil"))

    @classmethod
    def from_fixed(cls, lo: int, hi: int, w: int) -> "DyadicInterval":
        return cls(DyadicRational(int(lo), w), DyadicRational(int(hi), w))

    def fixed(self, w: int):
        """Outward integer endpoints at scale 2**w."""
        return self.lo.scaled(w, "floor"), self.hi.scaled(w, "ceil")

    @property
    def width(self) -> DyadicRational:
        return self.hi - self.lo

    @property
    def mid(self) -> DyadicRational:
        return (self.lo + self.hi).ldexp(-1)

    def width_le_pow2(self, bits: int) -> bool:
        """True iff width <= 2**-bits."""
        w = self.width
        if bits >= 0:
            return w.num << bits <= 1 << w.exp
        return w.num <= (1 << w.exp) << -bits

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, v) -> bool:
        if isinstance(v, DyadicInterval):
            return self.lo <= v.lo and v.hi <= self.hi
        return self.lo <= v <= self.hi

    __contains__ = contains

    def overlaps(self, other: "DyadicInterval") -> bool:
        return not (self.hi < other.lo or other.hi < self.lo)

    def intersect(self, other: "DyadicInterval") -> Optional["DyadicInterval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return DyadicInterval(lo, hi) if lo <= hi else None

    def hull(self, other: "DyadicInterval") -> "DyadicInterval":
        return DyadicInterval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __eq__(self, other):
        if not isinstance(other, DyadicInterval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"DyadicInterval({self.lo!s}, {self.hi!s})"

    def to_json(self) -> dict:
        return {"lo": self.lo.to_json(), "hi": self.hi.to_json()}

    @classmethod
    def from_json(cls, d) -> "DyadicInterval":
        return cls(DyadicRational.from_json(d["lo"]), DyadicRational.from_json(d["hi"]))


def as_interval(v) -> DyadicInterval:
    if isinstance(v, DyadicInterval):
        return v
    if isinstance(v, LazyParameter):
        return v.current
    return DyadicInterval(DyadicRational.from_value(v))


def pow2(k: int) -> DyadicRational:
    """2**k for any integer k."""
    return DyadicRational(1, -k)


# --------------------------------------------------------------------------
# fixed-point kernel for f_a(x) = a x (1 - x)

def f_step(al, ah, xl, xh, w):
    """Outward enclosure of f_a(x) over a in [al, ah], x in [xl, xh].

    All quantities are integers at scale 2**w with 0 <= xl <= xh <= 2**w and
    al >= 0.  The range of x(1-x) is computed exactly from the endpoints
    (it peaks at x = 1/2), so no dependency blowup occurs.
    """
    s = 1 << w
    half = s >> 1
    if xh <= half:
        hl = xl * (s - xl)
        hh = xh * (s - xh)
    elif xl >= half:
        hl = xh * (s - xh)
        hh = xl * (s - xl)
    else:
        hl = min(xl * (s - xl), xh * (s - xh))
        hh = s * s >> 2
    w2 = 2 * w
    return (al * hl) >> w2, -((-(ah * hh)) >> w2)


def orbit_fixed(al, ah, xl, xh, n, w, max_width=None):
    """List of n+1 fixed-point enclosures x_0..x_n (x_0 = input)."""
    al, ah, xl, xh = mpz(al), mpz(ah), mpz(xl), mpz(xh)
    out = [(xl, xh)]
    for _ in range(n):
        xl, xh = f_step(al, ah, xl, xh, w)
        if max_width is not None and xh - xl > max_width:
            raise EnclosureBlowup(f"enclosure wider than 2^{max_width.bit_length() - 1 - w} at working precision {w}")
        out.append((xl, xh))
    return out


def iterate_enclosure(a, x, n: int, work_bits: Optional[int] = None,
                      max_width: Number = 1) -> DyadicInterval:
    """Certified enclosure of f_a^n(x) over the parameter and point intervals.

    ``work_bits`` defaults to 2n + 64.  Raises EnclosureBlowup once the
    enclosure width reaches ``max_width`` (1 by default, i.e. all information
    lost).
    """
    a = as_interval(a)
    x = as_interval(x)
    if a.lo < 0 or a.hi > 4:
        raise InvalidInput("parameter must lie in [0, 4]")
    if x.lo < 0 or x.hi > 1:
        raise InvalidInput("point must lie in [0, 1]")
    w = work_bits if work_bits is not None else 2 * n + 64
    al, ah = a.fixed(w)
    xl, xh = x.fixed(w)
    lim = as_fraction(max_width)
    lim_fixed = (lim.numerator << w) // lim.denominator
    al, ah, xl, xh = mpz(al), mpz(ah), mpz(xl), mpz(xh)
    for _ in range(n):
        xl, xh = f_step(al, ah, xl, xh, w)
        if xh - xl >= lim_fixed:
            raise EnclosureBlowup(f"enclosure width reached {lim} at {w} working bits")
    return DyadicInterval.from_fixed(xl, xh, w)


# --------------------------------------------------------------------------
# monotone bisection

def bisect_monotone(pred: Callable[[DyadicRational], bool], bracket: DyadicInterval,
                    bits: int, *, audit: int = 0, seed: int = 0) -> DyadicInterval:
    """Bisect a monotone predicate down to width 2**-bits.

    Returns an interval whose endpoints have opposite predicate values.
    ``audit`` extra probes at seeded random points check the values against
    the final bracket and raise MonotonicityViolation on a contradiction.
    """
    lo, hi = bracket.lo, bracket.hi
    plo = bool(pred(lo))
    phi = bool(pred(hi))
    if plo == phi:
        raise NoSignChange(f"predicate is {plo} at both ends of {bracket!r}")
    step = pow2(-bits)
    while hi - lo > step:
        mid = (lo + hi).ldexp(-1)
        if bool(pred(mid)) == plo:
            lo = mid
        else:
            hi = mid
    if audit:
        rng = random.Random(seed)
        a0, a1 = bracket.lo, bracket.hi
        span = a1 - a0
        for _ in range(audit):
            t = DyadicRational(rng.getrandbits(53), 53)
            x = a0 + span * t
            v = bool(pred(x))
            if (x <= lo and v != plo) or (x >= hi and v != phi):
                raise MonotonicityViolation(f"predicate inconsistent at {x}")
    return DyadicInterval(lo, hi)


def bisect_sign(sign: Callable[[DyadicRational], Optional[int]], bracket: DyadicInterval,
                bits: int) -> DyadicInterval:
    """Locate a sign change of a certified three-way sign function.

    ``sign`` returns -1, 0 or +1 when certain and None when the enclosure
    straddles zero.  The result encloses a zero: either a point where the
    sign is exactly 0, or an interval with certified opposite signs at its
    ends.  Undecided midpoints are bypassed through quarter points; if those
    are undecided too, Undecidable is raised so the caller can add bits.
    """
    lo, hi = bracket.lo, bracket.hi
    slo, shi = sign(lo), sign(hi)
    if slo == 0:
        return DyadicInterval(lo)
    if shi == 0:
        return DyadicInterval(hi)
    if slo is None or shi is None:
        raise Undecidable(msg="sign undecided at bracket end")
    if slo == shi:
        raise NoSignChange(f"same sign {slo} at both ends of {bracket!r}")
    step = pow2(-bits)
    while hi - lo > step:
        mid = (lo + hi).ldexp(-1)
        sm = sign(mid)
        if sm == 0:
            return DyadicInterval(mid)
        if sm is None:
            q1 = (lo + mid).ldexp(-1)
            q3 = (mid + hi).ldexp(-1)
            s1, s3 = sign(q1), sign(q3)
            if s1 == 0:
                return DyadicInterval(q1)
            if s3 == 0:
                return DyadicInterval(q3)
            if s1 is None or s3 is None:
                raise Undecidable(msg=f"sign undecided near {mid}")
            if s1 != slo:
                hi = q1
            elif s3 == shi:
                lo, hi = q1, q3
            else:
                lo = q3
            continue
        if sm == slo:
            lo = mid
        else:
            hi = mid
    return DyadicInterval(lo, hi)


# --------------------------------------------------------------------------
# parameter with a refinable enclosure, and its dyadic oracle

class LazyParameter:
    """A real parameter known through nested dyadic enclosures.

    ``refiner(m)`` must return an enclosure of width <= 2**-m.  Oracle
    answers (floor of the enclosure midpoint on the 2**-m grid) are memoized,
    so repeated queries and replays are deterministic.  Answers at depth
    <= ``frozen_bits`` are inherited from a parent and never change.
    """

    def __init__(self, enclosure: DyadicInterval,
                 refiner: Optional[Callable[[int], DyadicInterval]] = None, *,
                 frozen_bits: int = 0, oracle_memo: Optional[dict] = None,
                 budget: int = 1 << 16, label: str = ""):
        self._current = enclosure
        self._refiner = refiner
        self.frozen_bits = int(frozen_bits)
        self.budget = budget
        self.label = label
        self._memo: dict[int, DyadicRational] = {}
        for m, q in (oracle_memo or {}).items():
            self._check_answer(int(m), q, enclosure)
            self._memo[int(m)] = q

    # construction -------------------------------------------------------
    @classmethod
    def exact(cls, value: Number, label: str = "") -> "LazyParameter":
        v = as_fraction(value)
        d = v.denominator
        if d & (d - 1) == 0:
            return cls(DyadicInterval(DyadicRational.from_value(v)), None, label=label)

        def refiner(m: int) -> DyadicInterval:
            return DyadicInterval.enclosing(v, m)

        return cls(refiner(64), refiner, label=label)

    @classmethod
    def from_interval(cls, iv: DyadicInterval, label: str = "") -> "LazyParameter":
        return cls(iv, None, label=label)

    @classmethod
    def coerce(cls, v) -> "LazyParameter":
        if isinstance(v, LazyParameter):
            return v
        if isinstance(v, DyadicInterval):
            return cls.from_interval(v)
        return cls.exact(v)

    # enclosure ----------------------------------------------------------
    @property
    def current(self) -> DyadicInterval:
        return self._current

    @property
    def oracle_memo(self) -> dict:
        return dict(self._memo)

    def refine(self, m: int) -> DyadicInterval:
        if self._current.width_le_pow2(m):
            return self._current
        if self._refiner is None or m > self.budget:
            raise RefinementExhausted(f"cannot narrow parameter to width 2^-{m}")
        new = self._refiner(m)
        inter = new.intersect(self._current)
        if inter is None:
            raise RefinementExhausted("refiner returned an interval outside the current enclosure")
        if not inter.width_le_pow2(m):
            raise RefinementExhausted(f"refiner did not reach width 2^-{m}")
        for k, q in self._memo.items():
            self._check_answer(k, q, inter)
        self._current = inter
        return inter

    def interval(self, bits: int) -> DyadicInterval:
        """Enclosure of width <= 2**-bits if reachable, else the tightest known."""
        try:
            return self.refine(bits)
        except RefinementExhausted:
            return self._current

    @staticmethod
    def _check_answer(m: int, q: DyadicRational, iv: DyadicInterval):
        tol = pow2(1 - m)
        if not (iv.lo > q - tol and iv.hi < q + tol):
            raise FrozenPrefixViolation(f"oracle answer at depth {m} is not valid for {iv!r}")

    # oracle -------------------------------------------------------------
    def oracle(self, m: int) -> DyadicRational:
        if m < 1:
            raise InvalidInput("oracle depth must be positive")
        q = self._memo.get(m)
        if q is not None:
            return q
        iv = self.refine(m + 1)
        mid = iv.mid
        q = DyadicRational(mid.scaled(m, "floor"), m)
        self._check_answer(m, q, iv)
        self._memo[m] = q
        return q

    def derive(self, enclosure: DyadicInterval,
               refiner: Optional[Callable[[int], DyadicInterval]] = None,
               frozen_bits: int = 0, label: str = "") -> "LazyParameter":
        """A new parameter sharing this one's oracle answers up to frozen_bits."""
        memo = {m: self.oracle(m) for m in range(1, frozen_bits + 1)}
        return LazyParameter(enclosure, refiner, frozen_bits=frozen_bits,
                             oracle_memo=memo, budget=self.budget, label=label)

    def to_json(self) -> dict:
        return {
            "enclosure": self._current.to_json(),
            "frozen_bits": self.frozen_bits,
            "oracle": {str(m): q.to_json() for m, q in sorted(self._memo.items())},
        }

    def __repr__(self):
        return f"LazyParameter({self._current!r}, frozen_bits={self.frozen_bits})"


def oracle_query(p: LazyParameter, m: int) -> DyadicRational:
    """The dyadic oracle: a value on the 2**-m grid within 2**-(m-1) of a."""
    return p.oracle(m)


def param_interval(a, bits: int) -> DyadicInterval:
    """Enclosure of a parameter-like value with width about 2**-bits."""
    if isinstance(a, LazyParameter):
        return a.interval(bits)
    if isinstance(a, DyadicInterval):
        return a
    f = as_fraction(a)
    return DyadicInterval.enclosing(f, bits)

