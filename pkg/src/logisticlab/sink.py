"""Attracting periodic orbits: superattracting parameters and sink certificates."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .dynamics import FixedMap, _sign_of_diff
from .errors import (EnclosureBlowup, InvalidInput, MultiplierInconclusive, NoCycleFound,
                     NoSignChange, Undecidable)
from .measures import (DiscreteMeasure, _jsonable, _start_points, orbit_positions, w1)
from .numerics import (DyadicInterval, DyadicRational, as_fraction, bisect_sign, mpz,
                       param_interval)


# --------------------------------------------------------------------------
# superattracting parameters

def critical_return(a, period: int, work_bits: int) -> DyadicInterval:
    """Enclosure of f_a^period(1/2) - 1/2 over the parameter enclosure."""
    a_iv = param_interval(a, work_bits)
    fm = FixedMap(a_iv, work_bits)
    lo, hi = fm.fn(fm.half, fm.half, period)
    return DyadicInterval.from_fixed(lo - fm.half, hi - fm.half, work_bits)


def closure_residual(a, period: int, work_bits: Optional[int] = None) -> Fraction:
    """Certified bound on |f_a^period(1/2) - 1/2| over the enclosure of a."""
    d = critical_return(a, period, work_bits or 2 * period + 192)
    return max(abs(d.lo.to_fraction()), abs(d.hi.to_fraction()))


def find_superattracting(window: DyadicInterval, period_total: int, bits: int = 53) -> DyadicInterval:
    """Enclosure of width <= 2**-bits of a parameter with f_a^p(1/2) = 1/2.

    Bisects on the certified sign of f_a^p(1/2) - 1/2.  An exact zero at a
    dyadic parameter (a = 2 for p = 1) gives a point interval.
    """
    if period_total < 1:
        raise InvalidInput("period must be positive")
    window = window if isinstance(window, DyadicInterval) else param_interval(window, bits + 8)
    extra = 64
    for _ in range(6):
        w = bits + 2 * period_total + extra

        def sign(a, w=w):
            d = critical_return(DyadicInterval(a), period_total, w)
            if d.lo > 0:
                return 1
            if d.hi < 0:
                return -1
            if d.is_point():
                return 0
            return None

        try:
            return bisect_sign(sign, window, bits)
        except Undecidable:
            extra *= 2
    raise Undecidable(msg="superattracting search did not settle")


# --------------------------------------------------------------------------
# sink certificates

@dataclass
class SinkCertificate:
    a: DyadicInterval
    orbit: list
    multiplier: DyadicInterval
    sink_measure: DiscreteMeasure
    basin_evidence: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def period(self) -> int:
        return len(self.orbit)

    def basin_fraction(self, tol=Fraction(1, 64)) -> Fraction:
        """Fraction of samples whose last W1 value is below tol."""
        if not self.basin_evidence:
            return Fraction(0)
        last = {}
        for x, n, d in self.basin_evidence:
            if x not in last or n > last[x][0]:
                last[x] = (n, d)
        ok = sum(1 for n, d in last.values() if d < tol)
        return Fraction(ok, len(last))

    def to_json(self) -> dict:
        return {
            "a": self.a.to_json(),
            "orbit": [p.to_json() for p in self.orbit],
            "multiplier": self.multiplier.to_json(),
            "sink_measure": self.sink_measure.to_json(),
            "basin_evidence": [{"x": x.to_json(), "n": n, "w1": _jsonable(d)} for x, n, d in self.basin_evidence],
            "meta": _jsonable(self.meta),
        }


def _float_cycle(af: float, x0: float, max_period: int, budget: int, tol: float):
    """Closest-return detection on a double-precision orbit."""
    x = x0
    hist = []
    chunk = max(4 * max_period, 256)
    for t in range(budget):
        x = af * x * (1.0 - x)
        hist.append(x)
        if len(hist) > chunk and (t + 1) % chunk == 0:
            tail = hist[-(max_period + 1):]
            ref = tail[-1]
            for p in range(1, max_period + 1):
                if abs(tail[-1 - p] - ref) < tol:
                    # confirm over a second lap
                    if all(abs(hist[-1 - i] - hist[-1 - i - p]) < tol for i in range(p)):
                        return p, hist[-p:]
            hist = hist[-(max_period + 1):]
    raise NoCycleFound(f"no cycle of period <= {max_period} within {budget} iterates")


def _interval_abs(lo, hi):
    if lo >= 0:
        return lo, hi
    if hi <= 0:
        return -hi, -lo
    return 0, max(-lo, hi)


def _certify_cycle_point(a_iv: DyadicInterval, x_guess: float, p: int, bits: int):
    """Certified enclosure of an attracting p-periodic point near x_guess and
    the enclosure of (f^p)' over it."""
    xg = DyadicRational.round(Fraction(x_guess), 60, "nearest")
    for extra in (64, 128, 256):
        w = bits + 2 * p + extra
        fm = FixedMap(a_iv, w)

        def sign(x, fm=fm):
            xl = xh = mpz(x.num) << (fm.w - x.exp) if x.exp <= fm.w else None
            if xl is None:
                lo, hi = DyadicInterval(x).fixed(fm.w)
                xl, xh = mpz(lo), mpz(hi)
            yl, yh = fm.fn(xl, xh, p)
            return _sign_of_diff(yl, yh, xl, xh)

        for k in range(12, 48, 4):
            d = DyadicRational(1, k)
            lo, hi = xg - d, xg + d
            if lo < 0 or hi > 1:
                continue
            bl, bh = DyadicInterval(lo, hi).fixed(w)
            dl, dh = fm.deriv(mpz(bl), mpz(bh), p)
            if not (dh < fm.one and dl > -fm.one):
                continue
            slo, shi = sign(lo), sign(hi)
            # F(x) = f^p(x) - x is strictly decreasing on the bracket
            if slo is None or shi is None:
                continue
            if slo == 0:
                root = DyadicInterval(lo)
            elif shi == 0:
                root = DyadicInterval(hi)
            elif slo > 0 > shi:
                # a wide parameter enclosure limits how far the point can be pinned
                root = None
                target = bits
                while root is None and target >= 16:
                    try:
                        root = bisect_sign(sign, DyadicInterval(lo, hi), target)
                    except Undecidable:
                        target -= 8
                if root is None:
                    break
            else:
                continue
            rl, rh = root.fixed(w)
            ml, mh = fm.deriv(mpz(rl), mpz(rh), p)
            return root, fm, (ml, mh)
    raise NoCycleFound("could not certify the detected cycle")


def certify_sink(a, seed_point=Fraction(1, 2), max_period: int = 64, samples: int = 0,
                 bits: int = 64, *, seed: int = 0, schedule: Sequence[int] = (10, 100, 1000, 10000),
                 budget: int = 200_000) -> SinkCertificate:
    """Detect, certify and sample the attracting cycle reached from seed_point.

    The parameter may be a point or an enclosure; cycle and multiplier are
    certified over the whole enclosure.  Basin sampling runs at the dyadic
    midpoint of the enclosure.
    """
    a_iv = param_interval(a, bits + 16)
    a_mid = a_iv.mid if not a_iv.is_point() else a_iv.lo
    af = float(a_mid)
    tol = max(2.0 ** (-bits / 2), 1e-12)
    p, pts = _float_cycle(af, float(as_fraction(seed_point)), max_period, budget, tol)
    # certify the cycle point closest to the critical point
    start = min(range(p), key=lambda i: abs(pts[i] - 0.5))
    root, fm, (ml, mh) = _certify_cycle_point(a_iv, pts[start], p, bits)
    xl, xh = (mpz(v) for v in root.fixed(fm.w))
    orbit = []
    for _ in range(p):
        orbit.append(fm.iv(xl, xh))
        xl, xh = fm.f(xl, xh)
    # the returned enclosure must come back onto itself
    if not DyadicInterval.from_fixed(xl, xh, fm.w).overlaps(orbit[0]):
        raise NoCycleFound("cycle enclosure does not close up")
    al, ah = _interval_abs(ml, mh)
    mult = DyadicInterval.from_fixed(al, ah, fm.w)
    if mult.hi >= 1:
        if mult.lo >= 1:
            raise NoCycleFound("detected cycle is not attracting")
        raise MultiplierInconclusive("multiplier enclosure straddles 1")
    orbit.sort(key=lambda iv: iv.lo)
    sink = DiscreteMeasure.uniform([DyadicRational.round(iv.mid, 64, "nearest") for iv in orbit],
                                   {"kind": "sink", "period": p})
    evidence = []
    if samples:
        sched = sorted(int(n) for n in schedule)
        for x0 in _start_points(samples, seed):
            try:
                pos, _ = orbit_positions(a_mid, x0, sched[-1])
            except EnclosureBlowup:
                continue
            for n in sched:
                nu = DiscreteMeasure.from_counts(_count(pos[:n]), 64)
                evidence.append((x0, n, w1(nu, sink)))
    meta = {"period": p, "sample_parameter": a_mid, "seed": seed, "samples": samples,
            "schedule": list(schedule)}
    return SinkCertificate(a_iv, orbit, mult, sink, evidence, meta)


def _count(xs):
    out = {}
    for v in xs:
        out[v] = out.get(v, 0) + 1
    return out
