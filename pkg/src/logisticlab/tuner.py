"""Finite-stage parameter tuning: steer the critical orbit so that it dwells
near chosen periodic orbits for prescribed fractions of its time, then close
it up into a superattracting cycle whose uniform measure matches the target
combination of periodic-orbit measures."""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import kneading as kn
from .dynamics import FixedMap, cached_orbit, find_tip_c, solve_stage
from .errors import (ContractionInconclusive, InvalidInput, NonMonotoneKneading, SearchError,
                     SpreadingFailed, ToleranceInfeasible, TunerFailure, Undecidable,
                     VerificationError, WindowCollapse)
from .measures import DiscreteMeasure, _jsonable, mass_near, w1
from .numerics import (DyadicInterval, DyadicRational, LazyParameter, as_fraction, bisect_sign,
                       mpz)
from .sink import closure_residual

SCHEMA = "tuned-parameter/1"
DEFAULT_OVERHEAD = 24  # letters per block reserved for transit and departure
POSITION_BITS = 64


# --------------------------------------------------------------------------
# target profiles and schedules

@dataclass(frozen=True)
class TargetProfile:
    """Weights l_j on orbits Per(n_j).

    ``free`` lists entries whose masses are neither checked nor corrected
    (lead-in and filler dwells that absorb what the others leave).
    ``mass_tolerance`` bounds |mass_near - l_j| for the other entries and
    defaults to ``tolerance``; ``w1_tolerance`` bounds the W1 distance to the
    target measure (None: not enforced).  ``stage_length`` fixes the total
    schedule length (0: long enough to amortize overheads at ``tolerance``).
    """

    entries: tuple
    tolerance: Fraction
    free: tuple = ()
    mass_tolerance: Optional[Fraction] = None
    w1_tolerance: object = "default"
    stage_length: int = 0

    def __post_init__(self):
        ents = tuple((int(n), as_fraction(l)) for n, l in self.entries)
        object.__setattr__(self, "entries", ents)
        object.__setattr__(self, "tolerance", as_fraction(self.tolerance))
        if not ents:
            raise InvalidInput("profile needs at least one entry")
        if len({n for n, _ in ents}) != len(ents):
            raise InvalidInput("orbit indices must be distinct")
        if any(n < 1 for n, _ in ents):
            raise InvalidInput("orbit indices start at 1")
        if any(l <= 0 for _, l in ents):
            raise InvalidInput("weights must be positive")
        if sum(l for _, l in ents) != 1:
            raise InvalidInput("weights must sum to 1")
        if self.tolerance <= 0:
            raise InvalidInput("tolerance must be positive")
        free = tuple(int(n) for n in self.free)
        if any(n not in self.indices for n in free):
            raise InvalidInput("free entries must be profile orbits")
        object.__setattr__(self, "free", free)
        mt = self.tolerance if self.mass_tolerance is None else as_fraction(self.mass_tolerance)
        object.__setattr__(self, "mass_tolerance", mt)
        wt = self.w1_tolerance
        if wt == "default":
            wt = self.tolerance
        elif wt is not None:
            wt = as_fraction(wt)
        object.__setattr__(self, "w1_tolerance", wt)

    @property
    def indices(self) -> list:
        return [n for n, _ in self.entries]

    def weight(self, n: int) -> Fraction:
        return dict(self.entries).get(n, Fraction(0))

    def to_json(self) -> dict:
        return {"entries": [[n, _jsonable(l)] for n, l in self.entries],
                "tolerance": _jsonable(self.tolerance), "free": list(self.free),
                "mass_tolerance": _jsonable(self.mass_tolerance),
                "w1_tolerance": _jsonable(self.w1_tolerance), "stage_length": self.stage_length}

    @classmethod
    def from_json(cls, d) -> "TargetProfile":
        wt = d.get("w1_tolerance", "default")
        return cls(tuple((n, Fraction(l)) for n, l in d["entries"]), Fraction(d["tolerance"]),
                   tuple(d.get("free", ())),
                   Fraction(d["mass_tolerance"]) if d.get("mass_tolerance") else None,
                   Fraction(wt) if isinstance(wt, str) and wt != "default" else wt,
                   d.get("stage_length", 0))


def schedule_fractions(schedule: Sequence, overhead: int = DEFAULT_OVERHEAD) -> dict:
    """Exact time fraction of each orbit, charging ``overhead`` per block."""
    total = sum(d for _, d in schedule) + overhead * len(schedule)
    out: dict = {}
    for n, d in schedule:
        out[n] = out.get(n, Fraction(0)) + Fraction(d, total)
    return out


def dwell_schedule(profile: TargetProfile, stage_bits: Optional[int] = None,
                   overhead: int = DEFAULT_OVERHEAD) -> list:
    """One dwell block per profile orbit, in profile order, with lengths whose
    time fractions (overheads included) are within tolerance/4 of the
    weights.  A profile with a fixed stage length gets blocks proportional to
    the weights without that guarantee."""
    tol = profile.tolerance
    if stage_bits is not None:
        tol = min(tol, Fraction(1, 1 << stage_bits))
    k = len(profile.entries)
    if profile.stage_length:
        body = profile.stage_length - k * overhead
        if body <= 0:
            raise ToleranceInfeasible("overhead exceeds the stage length")
        return [(n, max(1, round(l * body))) for n, l in profile.entries]
    total = math.ceil(4 * (k * overhead + 1) / tol)
    for _ in range(64):
        body = total - k * overhead
        if body <= 0:
            raise ToleranceInfeasible("overhead exceeds the stage length")
        sched = [(n, max(1, round(l * body))) for n, l in profile.entries]
        fr = schedule_fractions(sched, overhead)
        if all(abs(fr[n] - l) <= tol / 4 for n, l in profile.entries):
            return sched
        total = total * 5 // 4 + 1
    raise ToleranceInfeasible("no schedule meets the tolerance")


# --------------------------------------------------------------------------
# pullback windows

@dataclass(frozen=True)
class PullbackWindow:
    depth: int
    interval: DyadicInterval
    anchor_orbit: int
    contraction: DyadicInterval  # enclosure of 1/|F'| on the branch domain
    spread_iterate: int          # s with f^s(J_0) covering [beta', beta]
    branch_iterate: int          # number of f-steps in the forward word map

    def to_json(self) -> dict:
        return {"depth": self.depth, "interval": self.interval.to_json(),
                "anchor_orbit": self.anchor_orbit, "contraction": self.contraction.to_json(),
                "spread_iterate": self.spread_iterate, "branch_iterate": self.branch_iterate}


def _point(fm: FixedMap, x: DyadicRational):
    lo, hi = DyadicInterval(x).fixed(fm.w)
    return mpz(lo), mpz(hi)


def pullback_windows(a, orbit_index: int, max_depth: int = 8, bits: int = 64,
                     max_spread: int = 96) -> list:
    """Windows J_0, J_-1, ... accumulating on a point of Per_a(orbit_index).

    F is the first return word map g^k (doubled when it reverses
    orientation); J_-i = [a_i, b_i] with a_i, b_i inward-rounded preimages
    under the branch of F^-1 fixing the anchor point, so F(J_-i) lies in
    J_-(i-1).
    """
    geo = solve_stage(a, bits + 48)
    orb = cached_orbit(geo.a, orbit_index, bits + 32, geo)
    p = orb.g_points[0]
    k = orb.g_period
    steps = 3 * k
    w = bits + 4 * steps * (max_depth + 4) + 128
    fm = FixedMap(geo.a, w)
    bp, b = geo.beta_prime, geo.beta
    dom = None
    for e in range(3, bits - 8):
        d = DyadicRational(1, e)
        lo, hi = max(p.lo - d, bp.lo), min(p.hi + d, b.hi)
        # windows sit on the side of the anchor that stays inside the stage
        side = 1 if hi > p.hi + d.ldexp(-1) else -1
        if side < 0 and not lo < p.lo:
            continue
        dl, dh = fm.deriv(*_point_iv(fm, lo, hi), steps)
        if dl > fm.one:
            dom = (lo, hi, dl, dh, side, steps)
            break
        if dh < -fm.one:
            # orientation reversing: use the second iterate of the word map
            dl, dh = fm.deriv(*_point_iv(fm, lo, hi), 2 * steps)
            if dl > fm.one:
                dom = (lo, hi, dl, dh, side, 2 * steps)
                break
    if dom is None:
        raise ContractionInconclusive("no expanding monotone branch domain around the anchor")
    lo, hi, dl, dh, side, steps = dom
    one = fm.one
    contraction = DyadicInterval(DyadicRational(int(one * one // dh), w),
                                 DyadicRational(int(-((-(one * one)) // dl)), w))

    def F_sign(x: DyadicRational, t: DyadicRational):
        xl, xh = _point(fm, x)
        yl, yh = fm.fn(xl, xh, steps)
        tl, th = _point(fm, t)
        if yl > th:
            return 1
        if yh < tl:
            return -1
        if yl == yh == tl == th:
            return 0
        return None

    search = DyadicInterval(p.hi, hi) if side > 0 else DyadicInterval(lo, p.lo)

    def preimage(t: DyadicRational, up: bool) -> DyadicRational:
        """Bracket end of the F-preimage of t next to the anchor; the upper
        end maps at or above t, the lower end at or below."""
        r = bisect_sign(lambda x: F_sign(x, t), search, bits + 16)
        return r.hi if up else r.lo

    # J_0 spans one fundamental domain between psi(y) and the branch end y
    y = hi if side > 0 else lo
    if side > 0:
        if F_sign(p.hi, y) != -1 or F_sign(hi, y) != 1:
            raise SpreadingFailed("branch image does not cover the domain end")
        inner, outer = preimage(y, True), y
    else:
        if F_sign(p.lo, y) != 1 or F_sign(lo, y) != -1:
            raise SpreadingFailed("branch image does not cover the domain end")
        inner, outer = preimage(y, False), y

    def iv(i, o):
        return DyadicInterval(min(i, o), max(i, o))

    if not (inner < outer if side > 0 else outer < inner):
        raise SpreadingFailed("degenerate depth-0 window")
    j0 = iv(inner, outer)
    # spreading: two points of J_0 whose s-th image straddles [beta', beta]
    s_found = None
    grid = [j0.lo + j0.width * DyadicRational(j, 6) for j in range(65)]
    bpl, bh = fm.fix(bp)[0], fm.fix(b)[1]
    for s in range(1, max_spread + 1):
        below = above = False
        for x in grid:
            xl, xh = fm.fn(*_point(fm, x), s)
            below = below or xh <= bpl
            above = above or xl >= bh
        if below and above:
            s_found = s
            break
    if s_found is None:
        raise SpreadingFailed(f"no iterate up to {max_spread} spreads the depth-0 window")
    out = [PullbackWindow(0, j0, orbit_index, contraction, s_found, steps)]
    for depth in range(1, max_depth + 1):
        # inward rounding keeps F(J_-i) inside J_-(i-1)
        ni, no = preimage(inner, side > 0), preimage(outer, side < 0)
        sep = p.hi < ni < no if side > 0 else no < ni < p.lo
        if not sep:
            raise ContractionInconclusive(f"window at depth {depth} not separated from the anchor")
        ok_i = F_sign(ni, inner) in ((0, 1) if side > 0 else (0, -1))
        ok_o = F_sign(no, outer) in ((0, -1) if side > 0 else (0, 1))
        if not (ok_i and ok_o):
            raise ContractionInconclusive("forward chain not certified")
        inner, outer = ni, no
        out.append(PullbackWindow(depth, iv(inner, outer), orbit_index, contraction, s_found, steps))
    return out


def _point_iv(fm: FixedMap, lo: DyadicRational, hi: DyadicRational):
    l, h = DyadicInterval(lo, hi).fixed(fm.w)
    return mpz(l), mpz(h)


# --------------------------------------------------------------------------
# tuned parameters

@dataclass
class TunedParameter:
    a_star: DyadicInterval
    stage_length: int                 # m, with f^(m+1)(1/2) = 1/2
    schedule: list                    # (orbit_index, dwell_length, transit_length)
    achieved: DiscreteMeasure
    residual: Optional[Fraction]      # W1 to the target combination
    masses: dict = field(default_factory=dict)
    other_masses: dict = field(default_factory=dict)
    radius: Fraction = Fraction(0)
    closure_residual: Fraction = Fraction(0)
    profile: Optional[TargetProfile] = None
    parameter: Optional[LazyParameter] = None
    meta: dict = field(default_factory=dict)
    timing: Optional[float] = field(default=None, compare=False)

    @property
    def period(self) -> int:
        return self.stage_length + 1

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "a_star": self.a_star.to_json(),
            "stage_length": self.stage_length,
            "schedule": [list(s) for s in self.schedule],
            "achieved": self.achieved.to_json(),
            "residual": _jsonable(self.residual),
            "masses": {str(n): _jsonable(m) for n, m in sorted(self.masses.items())},
            "other_masses": {str(n): _jsonable(m) for n, m in sorted(self.other_masses.items())},
            "radius": _jsonable(self.radius),
            "closure_residual": _jsonable(self.closure_residual),
            "profile": self.profile.to_json() if self.profile else None,
            "parameter": self.parameter.to_json() if self.parameter else None,
            "meta": _jsonable(self.meta),
        }

    @classmethod
    def from_json(cls, d) -> "TunedParameter":
        if d.get("schema") != SCHEMA:
            raise InvalidInput("not a tuned-parameter record")
        a_star = DyadicInterval.from_json(d["a_star"])
        par = None
        if d.get("parameter"):
            pj = d["parameter"]
            memo = {int(m): DyadicRational.from_json(q) for m, q in pj["oracle"].items()}
            par = LazyParameter(DyadicInterval.from_json(pj["enclosure"]), None,
                                frozen_bits=pj["frozen_bits"], oracle_memo=memo)
        fr = lambda v: None if v is None else Fraction(v)
        return cls(a_star, d["stage_length"], [tuple(s) for s in d["schedule"]],
                   DiscreteMeasure.from_json(d["achieved"]), fr(d["residual"]),
                   {int(n): Fraction(m) for n, m in d["masses"].items()},
                   {int(n): Fraction(m) for n, m in d["other_masses"].items()},
                   Fraction(d["radius"]), Fraction(d["closure_residual"]),
                   TargetProfile.from_json(d["profile"]) if d.get("profile") else None,
                   par, d.get("meta", {}))


def _tip_lower() -> DyadicRational:
    return find_tip_c(256).lo


def _check_bracket(br: DyadicInterval, frozen_bits: int):
    if br.lo <= _tip_lower() or br.hi > 4:
        raise InvalidInput("bracket must lie strictly above the tip parameter and at most 4")
    if br.is_point():
        raise InvalidInput("bracket must have positive width")
    if frozen_bits > 0:
        k = br.lo.scaled(frozen_bits, "floor")
        top = DyadicRational(k + 1, frozen_bits)
        if br.hi > top:
            raise InvalidInput(f"bracket is not inside one dyadic cell of depth {frozen_bits}")


def _blocks(word: str, length: int) -> list:
    reps = length // len(word) + 2
    return [((word[i:] + word[:i]) * reps)[:length] for i in range(len(word))]


def _running_dwell(prefix: str, word: str) -> int:
    """Length of the longest suffix of prefix that follows the periodic
    pattern of word (some rotation of it)."""
    k = len(word)
    best = 0
    for i in range(k):
        rot = word[i:] + word[:i]
        # align the suffix so that its last letter continues rot periodically
        r = 0
        n = len(prefix)
        while r < n and prefix[n - 1 - r] == rot[(-1 - r) % k]:
            r += 1
        best = max(best, r)
    return best


def _continue(prefix: str, word: str, length: int) -> str:
    """Next ``length`` letters continuing the periodic run ending prefix."""
    k = len(word)
    for i in range(k):
        rot = word[i:] + word[:i]
        n = len(prefix)
        r = 0
        while r < n and prefix[n - 1 - r] == rot[(-1 - r) % k]:
            r += 1
        if r == _running_dwell(prefix, word):
            return "".join(rot[j % k] for j in range(length))
    return ""


def _orbit_radius(a_star: DyadicInterval, indices: Sequence[int], bits: int) -> Fraction:
    """Largest 2**-e (e >= 6) keeping the fattened orbits pairwise apart."""
    pts = []
    for j in indices:
        for p in cached_orbit(a_star, j, bits).f_points:
            pts.append((p.lo.to_fraction(), p.hi.to_fraction(), j))
    pts.sort()
    gap = Fraction(1)
    for (l0, h0, j0), (l1, h1, j1) in zip(pts, pts[1:]):
        if j0 != j1:
            gap = min(gap, l1 - h0)
    e = 6
    while Fraction(1, 1 << e) * 2 >= gap:
        e += 1
    return Fraction(1, 1 << e)


def steer(bracket: DyadicInterval, schedule: Sequence, words: dict, *,
          max_transit: int = 16, progress: Optional[Callable] = None):
    """Drive the kneading sequence through the dwell blocks and close it.

    Returns (P, a_star enclosure, realized schedule, kneading prefix)."""
    win = kn.window(bracket.lo, bracket.hi)
    realized = []
    T = win.prefix
    first = True
    for n, D in schedule:
        run = _running_dwell(win.prefix, words[n]) if first else 0
        first = False
        if run >= 2 * len(words[n]):
            # the bracket already forces part of this dwell: finish it
            rest = max(0, D - run)
            T = win.prefix + _continue(win.prefix, words[n], rest)
            nxt = kn.extend(win, T)
            if nxt is None:
                raise SearchError("forced dwell cannot be continued")
            win, t = nxt, -run
        else:
            t, win, T = kn.transit(win, _blocks(words[n], D), max_transit)
        realized.append((n, D, t))
        if progress:
            progress(f"block {n}: dwell {D}, transit {t}, prefix {len(T)}")
    P, a_star = _close(win)
    return P, a_star, realized, T


def _crit_orbit(a_star: DyadicInterval, P: int, w: int):
    fm = FixedMap(a_star, w)
    xl = xh = fm.half
    pts = []
    for _ in range(P):
        pts.append((xl, xh))
        xl, xh = fm.f(xl, xh)
    return fm, pts, (xl, xh)


def _close(win: kn.Window):
    """Superattracting closure with enough parameter precision that all
    critical-orbit enclosures are narrower than 2**-(POSITION_BITS + 8)."""
    pos = kn.closure_position(win, len(win.prefix) + 512)
    P = pos + 1
    sub = win
    # start no coarser than the window itself (its magnitude, not its denominator)
    wd = win.width
    bits = max(P + 96, wd.exp - wd.num.bit_length() + 1)
    for _ in range(16):
        try:
            _, a_star = kn.close(sub, bits)
        except Undecidable:
            bits += P // 2 + 32
            continue
        w = max(a_star.lo.exp, a_star.hi.exp) + 2 * P + 64
        fm, pts, last = _crit_orbit(a_star, P, w)
        widest = max(h - l for l, h in pts + [last])
        if widest <= (fm.one >> (POSITION_BITS + 8)):
            return P, a_star
        sub = kn.Window(a_star.lo, a_star.hi, win.prefix) if not a_star.is_point() else sub
        bits += P // 2 + 32
    raise WindowCollapse("closure enclosure did not tighten")


def certify_closure(a_star: DyadicInterval, P: int, prefix: str) -> dict:
    """Recheck the superattracting closure from scratch.

    All letters before index P-1 are decided and agree with ``prefix`` over
    the whole enclosure, f^P(1/2) - 1/2 has certified opposite signs (or is
    exactly 0) at the enclosure ends, and the multiplier enclosure of the
    cycle contains 0.
    """
    w = max(a_star.lo.exp, a_star.hi.exp) + 2 * P + 64
    fm, pts, last = _crit_orbit(a_star, P, w)
    letters = []
    for l, h in pts[1:]:
        if h < fm.half:
            letters.append("L")
        elif l > fm.half:
            letters.append("R")
        else:
            raise VerificationError("critical orbit enclosure meets 1/2 before closing")
    got = "".join(letters)
    if got[:len(prefix)] != prefix[:len(got)]:
        raise VerificationError("critical itinerary differs from the steered prefix")
    if not (last[0] <= fm.half <= last[1]):
        raise VerificationError("critical point does not return")
    ends = []
    for e in (a_star.lo, a_star.hi):
        k = kn.kneading(e, P)
        ends.append(k[P - 1] if len(k) == P else "C")
    if not (a_star.is_point() or set(ends) == {"L", "R"} or "C" in ends):
        raise VerificationError("no certified sign change of f^P(1/2) - 1/2")
    # the cycle passes through 1/2, where f' vanishes
    ml, mh = fm.deriv(fm.half, fm.half, P)
    if not (ml <= 0 <= mh):
        raise VerificationError("multiplier enclosure excludes 0")
    return {"period": P, "letters": got, "ends": ends,
            "residual": closure_residual(a_star, P, w)}


def achieved_measure(a_star: DyadicInterval, P: int) -> DiscreteMeasure:
    w = max(a_star.lo.exp, a_star.hi.exp) + 2 * P + 64
    fm, pts, _ = _crit_orbit(a_star, P, w)
    sh = w - POSITION_BITS
    counts: dict = {}
    for l, h in pts:
        k = int((l + h + (mpz(1) << sh)) >> (sh + 1))
        counts[k] = counts.get(k, 0) + 1
    return DiscreteMeasure.from_counts(counts, POSITION_BITS, {"kind": "sink", "period": P})


def target_measure(a, profile: TargetProfile, bits: int = 64) -> DiscreteMeasure:
    atoms = []
    for n, l in profile.entries:
        pts = cached_orbit(a, n, bits).f_points
        for p in pts:
            atoms.append((DyadicRational.round(p.mid, POSITION_BITS, "nearest"), l / len(pts)))
    return DiscreteMeasure(atoms, {"kind": "target"})


def request_hash(bracket: DyadicInterval, profile: TargetProfile, frozen_bits: int, extra=None) -> str:
    blob = json.dumps({"schema": SCHEMA, "bracket": bracket.to_json(), "profile": profile.to_json(),
                       "frozen_bits": frozen_bits, "extra": _jsonable(extra)},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def evaluate(a_star: DyadicInterval, P: int, profile: TargetProfile, bits: int = 64,
             survey: int = 10):
    """Achieved measure, per-orbit masses, radius and W1 residual at a_star."""
    achieved = achieved_measure(a_star, P)
    idx = sorted(set(profile.indices) | set(range(1, survey + 1)))
    radius = _orbit_radius(a_star, idx, bits)
    masses, others = {}, {}
    for j in idx:
        m = mass_near(achieved, cached_orbit(a_star, j, bits).f_points, radius)
        (masses if j in profile.indices else others)[j] = m
    residual = w1(achieved, target_measure(a_star, profile, bits))
    return achieved, masses, others, radius, residual


def tune(a_bracket: DyadicInterval, profile: TargetProfile, frozen_bits: int = 0, *,
         parent: Optional[LazyParameter] = None, bits: int = 64, max_iter: int = 10,
         cache_dir: Optional[str] = None, progress: Optional[Callable] = None,
         max_transit: int = 16) -> TunedParameter:
    """Find a superattracting parameter in the bracket whose cycle spends the
    profile's time fractions near the profile's orbits.

    Dwell lengths start from ``dwell_schedule`` and are corrected from the
    measured masses until every non-filler mass is within the profile's mass
    tolerance.  With ``parent`` the result inherits its oracle answers up to
    ``frozen_bits``.
    """
    a_bracket = a_bracket if isinstance(a_bracket, DyadicInterval) else DyadicInterval(*a_bracket)
    _check_bracket(a_bracket, frozen_bits)
    key = request_hash(a_bracket, profile, frozen_bits, {"bits": bits, "max_transit": max_transit})
    if cache_dir:
        path = os.path.join(cache_dir, key + ".json")
        if os.path.exists(path):
            with open(path) as fh:
                tp = TunedParameter.from_json(json.load(fh))
            verify_tuned(tp, profile, a_bracket)
            tp.parameter = _make_parameter(tp.a_star, parent, frozen_bits)
            tp.meta["cache"] = "hit"
            return tp
    t0 = time.time()
    ref = DyadicRational.round(a_bracket.mid, 64, "nearest")
    words = {n: cached_orbit(ref, n, bits).f_letters() for n in profile.indices}
    sched = dwell_schedule(profile)
    dwell = dict(sched)
    history = []
    best = None
    for it in range(max_iter):
        cur = [(n, dwell[n]) for n, _ in sched]
        try:
            P, a_star, realized, prefix = steer(a_bracket, cur, words, max_transit=max_transit,
                                                progress=progress)
        except (SearchError, Undecidable) as exc:
            raise TunerFailure(f"steering failed: {exc}") from exc
        achieved, masses, others, radius, residual = evaluate(a_star, P, profile, bits)
        errs = {n: profile.weight(n) - masses[n] for n in profile.indices if n not in profile.free}
        worst = max((abs(e) for e in errs.values()), default=Fraction(0))
        history.append({"iteration": it, "period": P, "dwell": dict(cur), "worst_mass_error": worst})
        if progress:
            progress(f"iteration {it}: period {P}, worst mass error {float(worst):.3g}")
        if best is None or worst < best[0]:
            best = (worst, P, a_star, realized, prefix, achieved, masses, others, radius, residual)
        if worst <= profile.mass_tolerance:
            break
        # a free filler after the first block absorbs the change so the
        # period, and with it every other fraction, stays put
        fillers = [n for n, _ in sched[1:] if n in profile.free]
        moved = 0
        for n, e in errs.items():
            step = round(e * P)
            dwell[n] = max(1, dwell[n] + step)
            moved += step
        if fillers:
            dwell[fillers[-1]] = max(1, dwell[fillers[-1]] - moved)
    worst, P, a_star, realized, prefix, achieved, masses, others, radius, residual = best
    if worst > profile.mass_tolerance:
        raise ToleranceInfeasible(f"mass error {float(worst):.3g} above tolerance after {max_iter} iterations")
    if profile.w1_tolerance is not None and residual >= profile.w1_tolerance:
        raise ToleranceInfeasible(f"W1 residual {float(residual):.3g} above tolerance")
    stray = [n for n, m in others.items() if m >= profile.tolerance]
    if stray:
        raise ToleranceInfeasible(f"orbits {stray} outside the profile carry mass above tolerance")
    cert = certify_closure(a_star, P, prefix)
    tp = TunedParameter(a_star, P - 1, realized, achieved, residual, masses, others, radius,
                        cert["residual"], profile, _make_parameter(a_star, parent, frozen_bits),
                        {"request": key, "bracket": a_bracket, "frozen_bits": frozen_bits,
                         "iterations": history, "prefix_length": len(prefix)})
    tp.timing = round(time.time() - t0, 3)
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        with open(os.path.join(cache_dir, key + ".json"), "w") as fh:
            json.dump(tp.to_json(), fh, sort_keys=True)
    return tp


def _make_parameter(a_star: DyadicInterval, parent: Optional[LazyParameter], frozen_bits: int):
    if parent is None:
        return LazyParameter.from_interval(a_star, label="tuned")
    return parent.derive(a_star, None, frozen_bits, label="tuned")


def verify_tuned(tp: TunedParameter, profile: Optional[TargetProfile] = None,
                 bracket: Optional[DyadicInterval] = None) -> dict:
    """Recompute closure, achieved measure and masses of a tuned parameter."""
    profile = profile or tp.profile
    if bracket is not None and not (bracket.lo <= tp.a_star.lo and tp.a_star.hi <= bracket.hi):
        raise VerificationError("tuned parameter lies outside the bracket")
    cert = certify_closure(tp.a_star, tp.period, "")
    ach = achieved_measure(tp.a_star, tp.period)
    if ach != tp.achieved:
        raise VerificationError("achieved measure does not match the recomputation")
    if profile is not None:
        for n in profile.indices:
            m = mass_near(ach, cached_orbit(tp.a_star, n).f_points, tp.radius)
            if m != tp.masses.get(n):
                raise VerificationError(f"mass near orbit {n} does not match")
            if n not in profile.free and abs(m - profile.weight(n)) > profile.mass_tolerance:
                raise VerificationError(f"mass near orbit {n} outside tolerance")
        for n, m in tp.other_masses.items():
            if m >= profile.tolerance:
                raise VerificationError(f"orbit {n} outside the profile carries mass {m}")
    return cert
