"""Kneading sequences of the critical orbit and parameter windows in which
the critical itinerary follows a prescribed letter string.

Letters: the orbit point f^k(1/2), k >= 1, is coded L (< 1/2), C (= 1/2) or
R (> 1/2).  Sequences are compared in the unimodal (twisted) order: at the
first difference L < C < R, reversed when the common prefix holds an odd
number of R's.  The kneading sequence is nondecreasing in the parameter on
the range used here; every steering step checks this at runtime.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import NonMonotoneKneading, SearchError, Undecidable, WindowCollapse
from .numerics import DyadicInterval, DyadicRational, bisect_sign, mpz

_VAL = {"L": 0, "C": 1, "R": 2}


def _work_bits(a: DyadicRational, n: int) -> int:
    return max(a.exp + 8, (9 * n) // 10 + 64)


def _run(a: DyadicRational, n: int, w: int, visit: Callable[[int, str], bool]):
    """Iterate the critical point with exact parameter ``a`` at scale 2**w,
    calling visit(i, letter) for i = 0..n-1 until it returns True.  Raises
    Undecidable when an enclosure straddles 1/2."""
    if a.exp > w:
        raise ValueError("working precision below parameter precision")
    A = mpz(a.num) << (w - a.exp)
    s = mpz(1) << w
    half = s >> 1
    quarter = s * s >> 2
    w2 = 2 * w
    xl = xh = half
    for i in range(n):
        if xh <= half:
            hl, hh = xl * (s - xl), xh * (s - xh)
        elif xl >= half:
            hl, hh = xh * (s - xh), xl * (s - xl)
        else:
            hl, hh = min(xl * (s - xl), xh * (s - xh)), quarter
        xl = (A * hl) >> w2
        xh = -((-(A * hh)) >> w2)
        if xh < half:
            c = "L"
        elif xl > half:
            c = "R"
        elif xl == xh:
            c = "C"
        else:
            raise Undecidable(i)
        if visit(i, c) or c == "C":
            return


def _with_precision(a: DyadicRational, n: int, work_bits: Optional[int], body):
    w = work_bits or _work_bits(a, n)
    for _ in range(12):
        try:
            return body(w)
        except Undecidable:
            w *= 2
    raise Undecidable(msg="kneading letters undecided at all tried precisions")


def kneading(a, n: int, work_bits: Optional[int] = None) -> str:
    """First n letters of the critical itinerary (shorter if it hits C)."""
    a = DyadicRational.from_value(a)

    def body(w):
        out = []
        _run(a, n, w, lambda i, c: out.append(c))
        return "".join(out)

    return _with_precision(a, n, work_bits, body)


def twisted_cmp(K: str, T: str) -> int:
    """Compare two letter strings over their common length."""
    par = 0
    for k, t in zip(K, T):
        if k != t:
            r = 1 if _VAL[k] > _VAL[t] else -1
            return -r if par else r
        if k == "R":
            par ^= 1
    return 0


def compare(a, T: str, work_bits: Optional[int] = None):
    """(sign, index) comparing the kneading sequence at ``a`` with T.

    Letters are generated lazily and generation stops at the first
    difference, whose index is returned (len(T) on agreement).
    """
    a = DyadicRational.from_value(a)
    n = len(T)

    def body(w):
        st = [0, n, 0]  # parity, first difference, sign

        def visit(i, c):
            t = T[i]
            if c != t:
                r = 1 if _VAL[c] > _VAL[t] else -1
                st[1], st[2] = i, (-r if st[0] else r)
                return True
            if c == "R":
                st[0] ^= 1
            return False

        _run(a, n, w, visit)
        return st[2], st[1]

    return _with_precision(a, n, work_bits, body)


# --------------------------------------------------------------------------
# windows

@dataclass(frozen=True)
class Window:
    """Parameter interval [lo, hi] on which the kneading sequence certifiably
    starts with ``prefix`` (checked at both ends; monotone in between)."""

    lo: DyadicRational
    hi: DyadicRational
    prefix: str

    @property
    def width(self) -> DyadicRational:
        return self.hi - self.lo

    @property
    def interval(self) -> DyadicInterval:
        return DyadicInterval(self.lo, self.hi)

    def grow_prefix(self, limit: int) -> "Window":
        """Extend the certified prefix while the end kneadings agree."""
        n = len(self.prefix)
        if n >= limit:
            return self
        k1, k2 = kneading(self.lo, limit), kneading(self.hi, limit)
        j = n
        while j < min(len(k1), len(k2)) and k1[j] == k2[j] and k1[j] != "C":
            j += 1
        return Window(self.lo, self.hi, k1[:j]) if j > n else self


def window(lo, hi, limit: int = 64) -> Window:
    lo, hi = DyadicRational.from_value(lo), DyadicRational.from_value(hi)
    if not lo < hi:
        raise WindowCollapse("window needs lo < hi")
    w = Window(lo, hi, "")
    if twisted_cmp(kneading(lo, limit), kneading(hi, limit)) > 0:
        raise NonMonotoneKneading("kneading decreases across the window")
    while True:
        w2 = w.grow_prefix(limit)
        if len(w2.prefix) < limit:
            return w2
        w, limit = w2, 2 * limit


def _mid(a: DyadicRational, b: DyadicRational) -> DyadicRational:
    return (a + b).ldexp(-1)


def _extend_once(win: Window, T: str, max_bits: int) -> Optional[Window]:
    lo, hi = win.lo, win.hi
    c_lo, _ = compare(lo, T)
    c_hi, _ = compare(hi, T)
    if c_lo > 0 or c_hi < 0:
        return None
    span = hi - lo
    floor_w = span.ldexp(-max_bits)
    if c_lo < 0 and c_hi > 0:
        l, h = lo, hi
        while True:
            if h - l < floor_w:
                return None
            m = _mid(l, h)
            c, _ = compare(m, T)
            if c == 0:
                break
            if c < 0:
                l = m
            else:
                h = m
        l1, h1, l2, h2 = l, m, m, h
    else:
        l1, h1 = (lo, lo) if c_lo == 0 else (lo, hi)
        l2, h2 = (hi, hi) if c_hi == 0 else (lo, hi)
    for _ in range(100000):
        inner = l2 - h1
        if inner < 0:
            raise WindowCollapse("window boundaries crossed")
        need1 = c_lo < 0 and (h1 - l1).ldexp(10) > inner
        need2 = c_hi > 0 and (h2 - l2).ldexp(10) > inner
        if not (need1 or need2):
            break
        if need1:
            m = _mid(l1, h1)
            c, _ = compare(m, T)
            if c > 0:
                raise NonMonotoneKneading("kneading above target left of the window")
            if c < 0:
                l1 = m
            else:
                h1 = m
        if need2:
            m = _mid(l2, h2)
            c, _ = compare(m, T)
            if c < 0:
                raise NonMonotoneKneading("kneading below target right of the window")
            if c > 0:
                h2 = m
            else:
                l2 = m
    return Window(h1, l2, T)


def extend(win: Window, T: str, first_chunk: int = 8) -> Optional[Window]:
    """Subwindow on which the kneading sequence starts with T, or None.

    The target is imposed in growing chunks so impossible targets are usually
    rejected after a few letters.  A chunk whose cylinder is not found above
    relative resolution 2**-(2*chunk + 48) counts as empty.
    """
    L = len(win.prefix)
    k = min(L, len(T))
    if T[:k] != win.prefix[:k]:
        return None
    if len(T) <= L:
        return win
    end = min(len(T), L + first_chunk)
    step = first_chunk
    while True:
        start = len(win.prefix)
        if end > start:
            win = _extend_once(win, T[:end], 2 * (end - start) + 48)
            if win is None:
                return None
        if end == len(T):
            return win
        step *= 2
        end = min(len(T), end + step)


def split(win: Window, pos: int, rel_bits: int = 24) -> list:
    """Split the window at the parameter where letter ``pos`` changes."""
    if len(win.prefix) < pos:
        win = win.grow_prefix(pos)
        if len(win.prefix) < pos:
            raise SearchError("window prefix shorter than split position")
    if len(win.prefix) > pos:
        return [win]
    k1 = kneading(win.lo, pos + 1)
    k2 = kneading(win.hi, pos + 1)
    a, b = k1[pos:pos + 1], k2[pos:pos + 1]
    if a == b and a != "C":
        return [Window(win.lo, win.hi, win.prefix + a)]
    if "C" in (a, b):
        # an end sits exactly on a superattracting parameter; nudge inward
        return [w for w in (_nudged(win, pos)) if w is not None]
    tgt = b
    l, h = win.lo, win.hi
    floor_w = (h - l).ldexp(-rel_bits)
    while h - l > floor_w:
        m = _mid(l, h)
        c = kneading(m, pos + 1)[pos:pos + 1]
        if c == "C":
            l, h = m, m
            break
        if c == tgt:
            h = m
        else:
            l = m
    out = []
    left_hi = l if l < h else l - floor_w
    right_lo = h if l < h else h + floor_w
    if left_hi > win.lo:
        out.append(Window(win.lo, left_hi, win.prefix + a))
    if right_lo < win.hi:
        out.append(Window(right_lo, win.hi, win.prefix + b))
    return out


def _nudged(win: Window, pos: int):
    eps = win.width.ldexp(-32)
    lo, hi = win.lo, win.hi
    if kneading(lo, pos + 1)[pos:pos + 1] == "C":
        lo = lo + eps
    if kneading(hi, pos + 1)[pos:pos + 1] == "C":
        hi = hi - eps
    return split(Window(lo, hi, win.prefix), pos)


def transit(win: Window, blocks: Sequence[str], max_depth: int = 16, cap: int = 64):
    """Breadth-first search over free transit letters followed by one of the
    blocks.  Returns (transit length, window, target string)."""
    L = len(win.prefix)
    nodes = [win]
    for t in range(max_depth + 1):
        for node in nodes:
            base = node.prefix[:L + t]
            if len(base) < L + t:
                continue
            for blk in blocks:
                T = base + blk
                r = extend(node, T)
                if r is not None:
                    return t, r, T
        nxt = []
        for node in nodes:
            if len(node.prefix) > L + t:
                nxt.append(node)
            else:
                nxt.extend(split(node, L + t))
        nxt.sort(key=lambda w: w.width, reverse=True)
        nodes = nxt[:cap]
    raise SearchError(f"no transit of length <= {max_depth} reaches the requested block")


def closure_position(win: Window, limit: int) -> int:
    """Index of the first letter on which the window ends disagree."""
    w = win.grow_prefix(limit)
    if len(w.prefix) >= limit:
        raise WindowCollapse("window ends agree on all inspected letters")
    return len(w.prefix)


def close(win: Window, bits: int) -> tuple:
    """Superattracting parameter inside the window.

    Returns (P, enclosure) with f^P(1/2) = 1/2 for some parameter of the
    enclosure, where P - 1 is the first index on which the window ends
    disagree; the enclosure has width at most 2**-bits.
    """
    pos = closure_position(win, len(win.prefix) + 256)
    P = pos + 1

    def sgn(a):
        k = kneading(a, P)
        if len(k) <= pos:
            raise NonMonotoneKneading("prefix changed inside the window")
        return {"L": -1, "R": 1, "C": 0}[k[pos]]

    return P, bisect_sign(sgn, win.interval, bits)
