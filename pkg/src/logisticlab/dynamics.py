"""Third-iterate stage of the logistic map and its periodic orbits.

For a slightly above the tip parameter c the map g = f_a^3 has an invariant
interval I = [beta', beta] around the critical point 0.5, folded over itself
by two monotone branches L = [beta', l] (decreasing) and R = [r, beta]
(increasing).  Points never leaving L u R form a Cantor set on which g acts
as the full 2-shift; periodic symbol words therefore name periodic orbits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Optional

from .errors import BranchLost, InvalidInput, NotFound, Undecidable
from .numerics import (DyadicInterval, DyadicRational, LazyParameter, as_fraction, bisect_sign,
                       f_step, mpz, param_interval)


# --------------------------------------------------------------------------
# fixed-point evaluation of f and g at a parameter enclosure

class FixedMap:
    """f_a and its iterates on integer enclosures at scale 2**w."""

    def __init__(self, a: DyadicInterval, w: int):
        self.a = a
        self.w = w
        al, ah = a.fixed(w)
        self.al, self.ah = mpz(al), mpz(ah)
        self.one = mpz(1) << w
        self.half = self.one >> 1

    def f(self, xl, xh):
        return f_step(self.al, self.ah, xl, xh, self.w)

    def fn(self, xl, xh, n):
        for _ in range(n):
            xl, xh = f_step(self.al, self.ah, xl, xh, self.w)
        return xl, xh

    def g(self, xl, xh):
        return self.fn(xl, xh, 3)

    def fix(self, iv: DyadicInterval):
        lo, hi = iv.fixed(self.w)
        return mpz(lo), mpz(hi)

    def iv(self, lo, hi) -> DyadicInterval:
        return DyadicInterval.from_fixed(lo, hi, self.w)

    def dy(self, v) -> DyadicRational:
        return DyadicRational(int(v), self.w)

    def fprime_sign(self, xl, xh) -> int:
        """Sign of f'(x) = a(1-2x) over [xl, xh]; 0 if not constant."""
        if xh < self.half:
            return 1
        if xl > self.half:
            return -1
        return 0

    def deriv(self, xl, xh, n):
        """Interval of (f^n)'(x) over [xl, xh] at scale 2**w (chain rule)."""
        w = self.w
        dl, dh = self.one, self.one
        for _ in range(n):
            cl = self.one - 2 * xh
            ch = self.one - 2 * xl
            fl, fh = _imul(self.al, self.ah, cl, ch, w)
            dl, dh = _imul(dl, dh, fl, fh, w)
            xl, xh = self.f(xl, xh)
        return dl, dh


def _imul(a, b, c, d, w):
    """Outward product of [a,b] and [c,d] at scale 2**w."""
    ps = (a * c, a * d, b * c, b * d)
    return min(ps) >> w, -((-max(ps)) >> w)


def _sign_of_diff(al, ah, bl, bh) -> Optional[int]:
    if al > bh:
        return 1
    if ah < bl:
        return -1
    if al == ah == bl == bh:
        return 0
    return None


# --------------------------------------------------------------------------
# stage geometry

@dataclass(frozen=True)
class StageGeometry:
    a: DyadicInterval
    beta: DyadicInterval
    beta_prime: DyadicInterval
    l: DyadicInterval
    r: DyadicInterval
    bits: int = 64

    @property
    def interval(self) -> DyadicInterval:
        return DyadicInterval(self.beta_prime.lo, self.beta.hi)

    def to_json(self) -> dict:
        return {
            "a": self.a.to_json(), "beta": self.beta.to_json(),
            "beta_prime": self.beta_prime.to_json(), "l": self.l.to_json(),
            "r": self.r.to_json(), "bits": self.bits,
        }

    @classmethod
    def from_json(cls, d) -> "StageGeometry":
        return cls(*(DyadicInterval.from_json(d[k]) for k in ("a", "beta", "beta_prime", "l", "r")),
                   bits=int(d.get("bits", 64)))


def _solve_beta(m: FixedMap, bits: int) -> DyadicInterval:
    """Smallest fixed point of g in (1/2, 1), with uniqueness certificate.

    Boxes of (1/2, 1) are discarded from the left while g(x) - x is certified
    nonzero on them; the first surviving box must show an increasing sign
    change with g' > 1 throughout, which isolates a single root.
    """
    one = m.one
    min_box = one >> 24
    stack = [(m.half, one)]
    cand = None
    while stack:
        u, v = stack.pop()
        gl, gh = m.g(u, v)
        if gh < u or gl > v:
            continue
        if v - u <= min_box:
            cand = (u, v)
            break
        c = (u + v) >> 1
        stack.append((c, v))
        stack.append((u, c))
    if cand is None:
        raise BranchLost("no fixed point of g found in (1/2, 1)")
    u, v = cand
    # widen a little so both ends are clear of the root
    u, v = u - min_box, v + min_box

    def sign(x: DyadicRational):
        xi = x.scaled(m.w)
        gl, gh = m.g(xi, xi)
        return _sign_of_diff(gl, gh, xi, xi)

    su, sv = sign(m.dy(u)), sign(m.dy(v))
    if su != -1 or sv != 1:
        raise BranchLost("fixed point of g is not a clean increasing crossing")
    dl, _ = m.deriv(u, v, 3)
    if dl <= one:
        raise BranchLost("cannot certify g' > 1 near beta")
    return bisect_sign(sign, m.iv(u, v), bits)


def _solve_level(m: FixedMap, lo, hi, level: DyadicInterval, bits: int) -> DyadicInterval:
    """Root of g(x) = level on the monotone piece [lo, hi]."""
    ll, lh = m.fix(level)

    def sign(x: DyadicRational):
        xi = x.scaled(m.w)
        gl, gh = m.g(xi, xi)
        return _sign_of_diff(gl, gh, ll, lh)

    return bisect_sign(sign, m.iv(lo, hi), bits)


def _branch_monotone(m: FixedMap, lo, hi, depth: int = 0) -> int:
    """Certified sign of g' on [lo, hi] (0 if it cannot be certified)."""
    s = 1
    xl, xh = lo, hi
    for _ in range(3):
        t = m.fprime_sign(xl, xh)
        if t == 0:
            break
        s *= t
        xl, xh = m.f(xl, xh)
    else:
        return s
    if depth > 24 or hi - lo < 4:
        return 0
    c = (lo + hi) >> 1
    a = _branch_monotone(m, lo, c, depth + 1)
    b = _branch_monotone(m, c, hi, depth + 1)
    return a if a == b else 0


def _param(a, bits):
    iv = param_interval(a, bits)
    if iv.lo <= 0 or iv.hi > 4:
        raise InvalidInput("parameter must lie in (0, 4]")
    return iv


def solve_stage(a, bits: int = 64) -> StageGeometry:
    """Landmarks beta, beta' = 1 - beta, l, r of the stage at parameter a.

    Raises BranchLost when the picture cannot be certified (for instance when
    a is not certifiably above the tip parameter).
    """
    extra = 8
    for attempt in range(7):
        bb = bits + extra
        a_iv = _param(a, bb + 80)
        m = FixedMap(a_iv, bb + 160)
        try:
            beta = _solve_beta(m, bb + 48)
            bp = DyadicInterval(1 - beta.hi, 1 - beta.lo)
            bpl, bph = m.fix(bp)
            gl, gh = m.g(m.half, m.half)
            if not gh < bpl:
                if gl > bph:
                    raise BranchLost("g(1/2) > beta': parameter is not above the tip")
                raise Undecidable(msg="g(1/2) versus beta' undecided")
            bl, bh = m.fix(beta)
            lb = bits + 2
            while True:
                l = _solve_level(m, bph, m.half, bp, lb)
                r = _solve_level(m, m.half, bl, bp, lb)
                if l.hi < m.dy(m.half) < r.lo:
                    break
                lb += 64
                if lb > bb + 48:
                    raise Undecidable(msg="branch ends not separated from 1/2")
        except Undecidable:
            extra = extra * 2 + 64
            continue
        geo = StageGeometry(a_iv, beta, bp, l, r, bits)
        _certify_stage(m, geo, bits)
        return geo
    raise BranchLost("stage geometry could not be resolved; parameter too close to the tip")


def _certify_stage(m: FixedMap, geo: StageGeometry, bits: int):
    if not (geo.beta_prime.hi < geo.l.lo and geo.l.hi < m.dy(m.half) < geo.r.lo
            and geo.r.hi < geo.beta.lo):
        raise BranchLost("landmark order beta' < l < 1/2 < r < beta not certified")
    for iv in (geo.beta, geo.beta_prime, geo.l, geo.r):
        if not iv.width_le_pow2(bits):
            raise BranchLost("landmark enclosure wider than requested; parameter enclosure too wide")
    bpl, _ = m.fix(geo.beta_prime)
    _, lh = m.fix(geo.l)
    rl, _ = m.fix(geo.r)
    _, bh = m.fix(geo.beta)
    if _branch_monotone(m, bpl, lh) != -1 or _branch_monotone(m, rl, bh) != 1:
        raise BranchLost("monotonicity of the stage branches not certified")


def branch_signs(geo: StageGeometry, work_bits: Optional[int] = None):
    """Certified signs of g' on L and R (expected -1 and +1)."""
    m = FixedMap(geo.a, work_bits or geo.bits + 96)
    bpl, _ = m.fix(geo.beta_prime)
    _, lh = m.fix(geo.l)
    rl, _ = m.fix(geo.r)
    _, bh = m.fix(geo.beta)
    return _branch_monotone(m, bpl, lh), _branch_monotone(m, rl, bh)


# --------------------------------------------------------------------------
# tip parameter

def _h_sign(a: DyadicRational, w: int) -> Optional[int]:
    m = FixedMap(DyadicInterval(a), w)
    x = m.half
    xs = [(x, x)]
    xl, xh = x, x
    for _ in range(9):
        xl, xh = m.f(xl, xh)
        xs.append((xl, xh))
    (l6, h6), (l9, h9) = xs[6], xs[9]
    return _sign_of_diff(l9, h9, l6, h6)


def tip_certificate(c: DyadicInterval, bits: int) -> dict:
    """Residual and fold checks for an enclosure of the tip parameter."""
    w = bits + 160
    m = FixedMap(c, w)
    orb = [(m.half, m.half)]
    for _ in range(9):
        orb.append(m.f(*orb[-1]))
    (l3, h3), (l6, h6), (l9, h9) = orb[3], orb[6], orb[9]
    residual = max(h9 - l6, h6 - l9)
    distinct = h3 < l6 or h6 < l3
    beta = _solve_beta(FixedMap(c, w), bits + 8)
    bl, bh = m.fix(beta)
    il, ih = m.one - bh, bh
    f1 = m.f(il, ih)
    f2 = m.f(*f1)
    fold = f1[0] > m.half and f2[1] < m.half and il < m.half < ih
    return {
        "residual": Fraction(int(residual), 1 << w),
        "g_half_distinct": bool(distinct),
        "fold_certified": bool(fold),
        "beta": beta,
    }


@lru_cache(maxsize=16)
def find_tip_c(bits: int = 64) -> DyadicInterval:
    """Enclosure of the smallest c in (3.85, 4) with g_c^2(1/2) = g_c^3(1/2).

    A dyadic grid of (3.85, 4) at spacing 2**-12 is scanned for the first
    sign change of h(a) = f_a^9(1/2) - f_a^6(1/2); bisection then narrows it
    until the residual of h over the whole enclosure is below 2**(4-bits).
    """
    res = 12
    start = DyadicRational.round(Fraction(385, 100), res, "ceil")
    step = DyadicRational(1, res)
    prev_a, prev_s = None, None
    a = start
    found = None
    while a < 4:
        w = 128
        s = _h_sign(a, w)
        while s is None and w < 4096:
            w *= 2
            s = _h_sign(a, w)
        if s is None:
            raise NotFound(f"sign of h undecidable at {a}")
        if s == 0:
            found = DyadicInterval(a)
            break
        if prev_s is not None and s != prev_s:
            found = DyadicInterval(prev_a, a)
            break
        prev_a, prev_s = a, s
        a = a + step
    if found is None:
        raise NotFound("no sign change of h in (3.85, 4)")
    target = bits + 24
    while True:
        w = target + 96

        def sign(x, w=w):
            return _h_sign(x, w)

        c = bisect_sign(sign, found, target) if not found.is_point() else found
        cert = tip_certificate(c, bits)
        if cert["residual"] < Fraction(16, 1 << bits):
            break
        target += 24
        found = c
    if not (cert["g_half_distinct"] and cert["fold_certified"]):
        raise NotFound("tip candidate fails the fold certificate")
    if not (Fraction(385, 100) < c.lo.to_fraction() and c.hi < 4):
        raise NotFound("tip candidate outside (3.85, 4)")
    return c


def tip_lower_bracket(bits: int = 256) -> DyadicRational:
    """A dyadic just above the tip parameter (upper end of its enclosure)."""
    return find_tip_c(bits).hi


# --------------------------------------------------------------------------
# symbolic words

@dataclass(frozen=True)
class SymbolicWord:
    letters: str

    def __post_init__(self):
        s = self.letters
        if not s or set(s) - {"0", "1"}:
            raise InvalidInput(f"invalid word {s!r}")
        if not _is_primitive(s):
            raise InvalidInput(f"word {s!r} is a repetition")
        if s != _min_rotation(s):
            raise InvalidInput(f"word {s!r} is not its minimal rotation")

    @property
    def g_period(self) -> int:
        return len(self.letters)

    def rotation(self, j: int) -> str:
        j %= len(self.letters)
        return self.letters[j:] + self.letters[:j]

    def __str__(self):
        return self.letters


def _is_primitive(s: str) -> bool:
    n = len(s)
    return all(s != s[d:] + s[:d] for d in range(1, n) if n % d == 0)


_PREC = str.maketrans("01", "10")


def _prec_key(s: str) -> str:
    """Sort key realizing the order 1 < 0 letterwise."""
    return s.translate(_PREC)


def _min_rotation(s: str) -> str:
    return min((s[j:] + s[:j] for j in range(len(s))), key=_prec_key)


@lru_cache(maxsize=64)
def words_of_period(k: int) -> tuple:
    out = []
    for bits in product("10", repeat=k):
        s = "".join(bits)
        if _is_primitive(s) and _min_rotation(s) == s:
            out.append(s)
    out.sort(key=_prec_key)
    return tuple(out)


def enumerate_words(count: int) -> list:
    """The first ``count`` orbit names: by period, then 1 < 0 lexicographic."""
    out = []
    k = 1
    while len(out) < count:
        if k > 24:
            raise InvalidInput("word enumeration limited to period 24")
        out.extend(SymbolicWord(s) for s in words_of_period(k))
        k += 1
    return out[:count]


def word_index(word: str) -> int:
    """Inverse of enumerate_words: 1-based index of a word."""
    w = _min_rotation(word)
    n = 0
    for k in range(1, len(w)):
        n += len(words_of_period(k))
    return n + words_of_period(len(w)).index(w) + 1


# --------------------------------------------------------------------------
# itineraries

@dataclass(frozen=True)
class Itinerary:
    letters: str
    status: str = "ok"  # ok | escape | undecidable
    step: Optional[int] = None

    def __str__(self):
        if self.status == "ok":
            return self.letters
        return f"{self.letters}:{self.status}({self.step})"


def _classify(xl, xh, lm):
    bpl, lh, ll, rl, rh, bh = lm
    if xh < bpl or xl > bh or (xl > lh and xh < rl):
        return "E"
    if xh < ll:
        return "0"
    if xl > rh:
        return "1"
    return "?"


def _landmarks(m: FixedMap, geo: StageGeometry):
    bpl, _ = m.fix(geo.beta_prime)
    ll, lh = m.fix(geo.l)
    rl, rh = m.fix(geo.r)
    _, bh = m.fix(geo.beta)
    return bpl, lh, ll, rl, rh, bh


def itinerary(a, x: DyadicInterval, steps: int, geometry: Optional[StageGeometry] = None,
              work_bits: Optional[int] = None) -> Itinerary:
    """Branch letters of the g-orbit of x (0 for L, 1 for R).

    The letter is decided by the side of the central gap (l, r) on which the
    enclosure lies; the outer ends beta' and beta are treated as closed, so
    enclosures of beta itself read as letter 1.  Escape is reported only when
    an iterate is certifiably outside [beta', beta] or inside the gap.
    """
    geo = geometry or solve_stage(a, 64)
    w = work_bits or max(geo.bits + 96, 3 * steps + 128)
    m = FixedMap(geo.a, w)
    lm = _landmarks(m, geo)
    xl, xh = m.fix(x)
    out = []
    for k in range(steps):
        c = _classify(xl, xh, lm)
        if c == "E":
            return Itinerary("".join(out), "escape", k)
        if c == "?":
            return Itinerary("".join(out), "undecidable", k)
        out.append(c)
        xl, xh = m.g(xl, xh)
    return Itinerary("".join(out))


# --------------------------------------------------------------------------
# periodic orbits

@dataclass(frozen=True)
class PeriodicOrbit:
    index: int
    word: SymbolicWord
    g_points: tuple
    f_points: tuple
    a: DyadicInterval
    degenerate: bool = False

    @property
    def g_period(self) -> int:
        return self.word.g_period

    @property
    def f_period(self) -> int:
        return len(self.f_points)

    def f_letters(self) -> str:
        """L/R letters of the f-orbit in orbit order starting at p^1."""
        out = []
        for p in self.f_points:
            if p.hi < Fraction(1, 2):
                out.append("L")
            elif p.lo > Fraction(1, 2):
                out.append("R")
            else:
                raise Undecidable(msg="orbit point straddles 1/2")
        return "".join(out)

    def to_json(self) -> dict:
        return {
            "n": self.index, "word": self.word.letters,
            "g_points": [p.to_json() for p in self.g_points],
            "f_points": [p.to_json() for p in self.f_points],
            "a": self.a.to_json(), "degenerate": self.degenerate,
        }

    @classmethod
    def from_json(cls, d) -> "PeriodicOrbit":
        return cls(int(d["n"]), SymbolicWord(d["word"]),
                   tuple(DyadicInterval.from_json(p) for p in d["g_points"]),
                   tuple(DyadicInterval.from_json(p) for p in d["f_points"]),
                   DyadicInterval.from_json(d["a"]), bool(d.get("degenerate", False)))


def _inverse_branch(m: FixedMap, y, branch, lo, hi, steps):
    """Approximate (uncertified) solution of g(x) = y on a monotone branch."""
    incr = branch == "1"
    for _ in range(steps):
        c = (lo + hi) >> 1
        gl, gh = m.g(c, c)
        below = (gl + gh) >> 1 < y
        if below == incr:
            lo = c
        else:
            hi = c
    return (lo + hi) >> 1


def _seed_point(m: FixedMap, geo: StageGeometry, word: str, target_bits: int):
    """Approximate fixed point of the composed inverse branches of ``word``."""
    bpl, bph = m.fix(geo.beta_prime)
    ll, lh = m.fix(geo.l)
    rl, rh = m.fix(geo.r)
    bl, bh = m.fix(geo.beta)
    pieces = {"0": ((bpl + bph) >> 1, (ll + lh) >> 1), "1": ((rl + rh) >> 1, (bl + bh) >> 1)}
    y = m.half
    steps = m.w
    tol = m.one >> target_bits
    for _ in range(4 * target_bits + 8):
        prev = y
        for s in reversed(word):
            lo, hi = pieces[s]
            y = _inverse_branch(m, y, s, lo, hi, steps)
        if abs(y - prev) <= tol:
            break
    return y


def _certify_fixed_point(m: FixedMap, seed, k: int, bits: int) -> DyadicInterval:
    """Certified enclosure of the fixed point of g^k near ``seed``."""
    n = 3 * k

    def sign(x: DyadicRational):
        xi = x.scaled(m.w)
        gl, gh = m.fn(xi, xi, n)
        return _sign_of_diff(gl, gh, xi, xi)

    delta = m.one >> (bits + 4)
    for _ in range(8):
        lo, hi = seed - delta, seed + delta
        s_lo, s_hi = sign(m.dy(lo)), sign(m.dy(hi))
        if s_lo is not None and s_hi is not None and s_lo != s_hi:
            dl, dh = m.deriv(lo, hi, n)
            if dl > m.one or dh < m.one:  # (g^k)' - 1 has constant sign
                return bisect_sign(sign, m.iv(lo, hi), bits)
        delta <<= 6
    raise Undecidable(msg="could not bracket the periodic point")


def solve_periodic_orbit(a, n: int, bits: int = 64,
                         geometry: Optional[StageGeometry] = None) -> PeriodicOrbit:
    """Certified orbit Per_a(n) named by the n-th symbolic word."""
    word = enumerate_words(n)[n - 1]
    k = word.g_period
    inner = bits + 6 * k + 12
    if geometry is None or geometry.bits < inner:
        geometry = solve_stage(geometry.a if geometry is not None else a, inner)
    geo = geometry
    w = inner + 96
    m = FixedMap(geo.a, w)
    if word.letters == "1":
        p1 = geo.beta
    else:
        seed = _seed_point(m, geo, word.letters, inner + 8)
        p1 = _certify_fixed_point(m, seed, k, inner)
    lm = _landmarks(m, geo)
    gpts = []
    xl, xh = m.fix(p1)
    fpts = []
    for j in range(k):
        letter = _classify(xl, xh, lm)
        if letter != word.letters[j]:
            raise Undecidable(j, f"orbit point {j} of word {word} not certified in its branch")
        gpts.append(m.iv(xl, xh))
        yl, yh = xl, xh
        for _ in range(3):
            fpts.append((yl, yh))
            yl, yh = m.f(yl, yh)
        xl, xh = m.g(xl, xh)
    # wrap-around: g^k(p1) must meet p1
    p1l, p1h = m.fix(p1)
    if xh < p1l or xl > p1h:
        raise Undecidable(msg="periodic orbit does not close")
    fpts_iv, degenerate = _dedupe(m, fpts)
    for p in gpts + fpts_iv:
        if not p.width_le_pow2(bits):
            raise Undecidable(msg="orbit enclosure wider than requested")
    return PeriodicOrbit(n, word, tuple(gpts), tuple(fpts_iv), geo.a, degenerate)


def _dedupe(m: FixedMap, pts):
    """Merge overlapping enclosures (set semantics), keeping orbit order."""
    order = sorted(range(len(pts)), key=lambda i: pts[i][0])
    merged_into = {}
    for a, b in zip(order, order[1:]):
        if pts[b][0] <= pts[a][1]:
            merged_into[b] = merged_into.get(a, a)
    out = []
    seen = {}
    for i, (lo, hi) in enumerate(pts):
        root = merged_into.get(i, i)
        if root in seen:
            j = seen[root]
            plo, phi = out[j]
            out[j] = (min(plo, lo), max(phi, hi))
        else:
            seen[root] = len(out)
            out.append((lo, hi))
    return [m.iv(lo, hi) for lo, hi in out], len(out) < len(pts)


def lambda_measure(a, n: int, bits: int = 64, geometry: Optional[StageGeometry] = None):
    """Uniform probability measure on Per_a(n)."""
    from .measures import DiscreteMeasure

    orb = solve_periodic_orbit(a, n, bits, geometry)
    pos = max(bits, 64)
    mids = [DyadicRational.round(p.mid, pos, "nearest") for p in orb.f_points]
    return DiscreteMeasure.uniform(mids, meta={"kind": "lambda", "n": n, "word": orb.word.letters})


def orbit_cache_key(a, n: int, bits: int):
    if isinstance(a, DyadicInterval):
        return ("iv", a.lo.num, a.lo.exp, a.hi.num, a.hi.exp, n, bits)
    f = as_fraction(a)
    return ("q", f.numerator, f.denominator, n, bits)


_ORBIT_CACHE: dict = {}


def cached_orbit(a, n: int, bits: int = 64, geometry: Optional[StageGeometry] = None) -> PeriodicOrbit:
    """solve_periodic_orbit with a small in-process memo."""
    if geometry is not None:
        a = geometry.a
    elif isinstance(a, LazyParameter):
        a = a.current
    key = orbit_cache_key(a, n, bits)
    hit = _ORBIT_CACHE.get(key)
    if hit is None:
        hit = solve_periodic_orbit(a, n, bits, geometry)
        if len(_ORBIT_CACHE) > 4096:
            _ORBIT_CACHE.clear()
        _ORBIT_CACHE[key] = hit
    return hit


__all__ = [
    "FixedMap", "StageGeometry", "SymbolicWord", "PeriodicOrbit", "Itinerary",
    "solve_stage", "find_tip_c", "tip_certificate", "enumerate_words", "word_index",
    "itinerary", "solve_periodic_orbit", "lambda_measure", "cached_orbit", "branch_signs",
    "LazyParameter",
]
