"""Finite-round fooling game.

A Player holds a tuned superattracting parameter and a pairwise mass
profile.  Each round an opponent estimator reads finitely many oracle bits
of the parameter and estimates the integral of a separating test function
against the physical measure.  The Player then retunes inside the dyadic
cell fixed by the bits the opponent read, moving the mass so that the
answer is off by more than the promised precision.

Every tuned parameter starts with a fixed lead-in dwell on a neutral orbit.
Retuning near the previous parameter forces the first few hundred kneading
letters, and the lead-in keeps that forced stretch away from the orbits
whose masses are being decided.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import cached_orbit, find_tip_c
from .errors import (InvalidInput, LabError, PrecisionError, SearchError, SeparationImpossible,
                     VerificationError)
from .measures import (DiscreteMeasure, TestFunction, _jsonable, enumerate_tau, integrate,
                       mass_near, separating_tau, tau_index)
from .numerics import DyadicInterval, DyadicRational, LazyParameter
from .tuner import (TargetProfile, TunedParameter, _orbit_radius, achieved_measure,
                    certify_closure, tune)

SCHEMA = "game-transcript/1"
REPORT_SCHEMA = "game-verdict/1"
MAX_ROUNDS = 3
OPPONENT_NOTE = "finite plug-in list of estimators standing in for all oracle machines"


def epsilon(n: int) -> Fraction:
    return Fraction(1, 100 << n)


def threshold(n: int) -> Fraction:
    return Fraction(1, 2 << n)


# --------------------------------------------------------------------------
# profile

@dataclass(frozen=True)
class PTildeProfile:
    """Pairwise mass profile: round n puts 2**-n on orbit 2n - s_n and 0 on
    its partner.  What the decided rounds leave is the undistributed tail."""

    decided: tuple = ()  # ((n, s_n), ...) for n = 1..level

    def __post_init__(self):
        d = tuple((int(n), int(s)) for n, s in self.decided)
        if [n for n, _ in d] != list(range(1, len(d) + 1)):
            raise InvalidInput("rounds must be decided in order 1, 2, ...")
        if any(s not in (0, 1) for _, s in d):
            raise InvalidInput("choice bits must be 0 or 1")
        object.__setattr__(self, "decided", d)

    @property
    def level(self) -> int:
        return len(self.decided)

    @property
    def masses(self) -> dict:
        out = {}
        for n, s in self.decided:
            out[2 * n - s] = Fraction(1, 1 << n)
            out[2 * n - (1 - s)] = Fraction(0)
        return out

    def mass(self, j: int) -> Fraction:
        return self.masses.get(j, Fraction(0))

    @property
    def tail(self) -> Fraction:
        return 1 - sum(self.masses.values())

    def decide(self, n: int, s: int) -> "PTildeProfile":
        if n != self.level + 1:
            raise InvalidInput(f"round {n} cannot follow level {self.level}")
        return PTildeProfile(self.decided + ((n, s),))

    def target(self, lead: int, lead_weight: Fraction, stage_length: int) -> TargetProfile:
        """Tuner profile: lead-in, decided orbits in round order, then the
        tail orbit 2N + 2 carrying what the lead-in leaves of the tail."""
        N = self.level
        tol = Fraction(1, 100 << N) if N else Fraction(1, 100)
        filler = 2 * N + 2
        entries = [(lead, lead_weight)]
        entries += [(2 * n - s, Fraction(1, 1 << n)) for n, s in self.decided]
        entries.append((filler, self.tail - lead_weight))
        return TargetProfile(tuple(entries), tol, free=(lead, filler),
                             mass_tolerance=Fraction(1, 400 << N), w1_tolerance=None,
                             stage_length=stage_length)

    def to_json(self) -> dict:
        return {"level": self.level, "decided": {str(n): s for n, s in self.decided},
                "masses": {str(j): str(m) for j, m in sorted(self.masses.items())},
                "tail": str(self.tail)}

    @classmethod
    def from_json(cls, d) -> "PTildeProfile":
        return cls(tuple(sorted((int(n), int(s)) for n, s in d["decided"].items())))


# --------------------------------------------------------------------------
# oracle access and opponents

class OracleHandle:
    """The only window an opponent has on the parameter.  Logs every query;
    ``limit`` caps the depth (replays against a truncated oracle)."""

    def __init__(self, source, limit: Optional[int] = None, max_queries: int = 10_000):
        self._source = source
        self.limit = limit
        self.max_queries = max_queries
        self.log: list = []

    def query(self, m: int) -> DyadicRational:
        m = int(m)
        if m < 1:
            raise InvalidInput("oracle depth must be positive")
        if self.limit is not None and m > self.limit:
            raise VerificationError(f"replay asked for bit {m} beyond depth {self.limit}")
        if len(self.log) >= self.max_queries:
            raise SearchError("opponent exceeded its query budget")
        self.log.append(m)
        if isinstance(self._source, LazyParameter):
            return self._source.oracle(m)
        if m not in self._source:
            raise VerificationError(f"no stored oracle answer at depth {m}")
        return self._source[m]

    @property
    def deepest(self) -> int:
        return max(self.log, default=0)


def _tau_arrays(tau: TestFunction):
    xs = np.array([float(x) for x, _ in tau.breakpoints])
    ys = np.array([float(y) for _, y in tau.breakpoints])
    return xs, ys


def _float_average(tau: TestFunction, a_hat: float, seed: int, starts: int, iterates: int,
                   burn_in: int = 0) -> Fraction:
    """Average of tau along double-precision orbits from seeded start points."""
    rng = np.random.default_rng(seed)
    x = rng.random(starts)
    for _ in range(burn_in):
        x = a_hat * x * (1.0 - x)
    xs, ys = _tau_arrays(tau)
    acc = np.zeros(starts)
    for _ in range(iterates):
        x = a_hat * x * (1.0 - x)
        acc += np.interp(x, xs, ys)
    return Fraction(float(acc.sum() / (starts * iterates)))


class Opponent:
    """Estimator interface.  ``estimate`` must be deterministic given the
    test function, precision, oracle answers and the opponent's seed."""

    name = "opponent"

    def __init__(self, seed: int = 0, **config):
        self.seed = int(seed)
        self.config = config

    def identity(self) -> dict:
        return {"name": self.name, "seed": self.seed, "config": _jsonable(self.config)}

    def estimate(self, tau: TestFunction, eps: Fraction, oracle: OracleHandle) -> Fraction:
        raise NotImplementedError


class ConstantOpponent(Opponent):
    name = "constant"

    def __init__(self, seed: int = 0, value="0"):
        super().__init__(seed, value=str(Fraction(value)))

    def estimate(self, tau, eps, oracle):
        return Fraction(self.config["value"])


class BirkhoffSampler(Opponent):
    """Reads ``bits`` oracle bits, then averages tau along float orbits of the
    rounded parameter from ``starts`` seeded initial points."""

    name = "birkhoff"

    def __init__(self, seed: int = 0, bits: int = 48, iterates: int = 100_000, starts: int = 4):
        super().__init__(seed, bits=int(bits), iterates=int(iterates), starts=int(starts))

    def estimate(self, tau, eps, oracle):
        c = self.config
        a_hat = float(oracle.query(c["bits"]).to_fraction())
        return _float_average(tau, a_hat, self.seed, c["starts"], c["iterates"])


class AdaptiveRefiner(Opponent):
    """Doubles the number of bits read until two successive estimates agree
    to eps/2 (or ``max_bits`` is reached)."""

    name = "adaptive"

    def __init__(self, seed: int = 0, start_bits: int = 8, max_bits: int = 64,
                 iterates: int = 20_000, starts: int = 2):
        super().__init__(seed, start_bits=int(start_bits), max_bits=int(max_bits),
                         iterates=int(iterates), starts=int(starts))

    def estimate(self, tau, eps, oracle):
        c = self.config
        bits, prev = c["start_bits"], None
        while True:
            a_hat = float(oracle.query(bits).to_fraction())
            est = _float_average(tau, a_hat, self.seed, c["starts"], c["iterates"])
            if prev is not None and abs(est - prev) <= eps / 2:
                return est
            if bits >= c["max_bits"]:
                return est
            prev, bits = est, min(2 * bits, c["max_bits"])


OPPONENTS = {cls.name: cls for cls in (ConstantOpponent, BirkhoffSampler, AdaptiveRefiner)}


def make_opponent(spec) -> Opponent:
    """Build an opponent from {"name", "seed", "config"} or "name[:k=v,...]"."""
    if isinstance(spec, Opponent):
        return spec
    if isinstance(spec, str):
        name, _, rest = spec.partition(":")
        cfg = dict(kv.split("=", 1) for kv in rest.split(",") if kv)
        seed = int(cfg.pop("seed", 0))
        spec = {"name": name, "seed": seed, "config": cfg}
    name = spec["name"]
    if name not in OPPONENTS:
        raise InvalidInput(f"unknown opponent {name!r}; choose from {sorted(OPPONENTS)}")
    return OPPONENTS[name](spec.get("seed", 0), **spec.get("config", {}))


def derive_seed(seed: int, *names) -> int:
    """Named sub-stream of a master seed."""
    key = tuple(int.from_bytes(str(nm).encode()[:8].ljust(8, b"\0"), "little") for nm in names)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


# --------------------------------------------------------------------------
# rounds

@dataclass
class GameConfig:
    rounds: int = 2
    max_rounds: int = 2
    bits: int = 64
    cache_dir: Optional[str] = None
    max_iter: int = 10

    @property
    def lead(self) -> int:
        return 2 * self.max_rounds + 3

    @property
    def lead_weight(self) -> Fraction:
        return Fraction(1, 2 << self.max_rounds)

    @property
    def stage_length(self) -> int:
        return max(4096, 512 << (self.max_rounds + 1))

    def to_json(self) -> dict:
        return {"rounds": self.rounds, "max_rounds": self.max_rounds, "bits": self.bits,
                "lead": self.lead, "lead_weight": str(self.lead_weight),
                "stage_length": self.stage_length, "max_iter": self.max_iter}


@dataclass
class GameState:
    tuned: TunedParameter
    profile: PTildeProfile
    taus: list = field(default_factory=list)  # tau of every completed round


@dataclass
class RoundRecord:
    n: int
    tau_index: int
    tau: TestFunction
    q: Fraction
    queries: list
    l_n: int
    case: int
    s: int
    a_before: DyadicInterval
    a_after: DyadicInterval
    bracket: DyadicInterval
    mu_after: DiscreteMeasure
    period: int
    integral_before: Fraction
    integral_after: Fraction
    fooling_margin: Fraction
    opponent: dict
    answers: dict
    replay_q: Fraction
    masses: dict
    radius: Fraction
    closure_residual: Fraction
    status: str = "complete"

    @property
    def epsilon(self) -> Fraction:
        return epsilon(self.n)

    def to_json(self) -> dict:
        return {
            "n": self.n, "tau_index": str(self.tau_index), "tau": self.tau.to_json(),
            "epsilon": str(self.epsilon), "q": str(self.q), "queries": list(self.queries),
            "l_n": self.l_n, "case": self.case, "s": self.s,
            "a_before": self.a_before.to_json(), "a_after": self.a_after.to_json(),
            "bracket": self.bracket.to_json(), "mu_after": self.mu_after.to_json(),
            "period": self.period, "integral_before": str(self.integral_before),
            "integral_after": str(self.integral_after),
            "fooling_margin": str(self.fooling_margin), "opponent": self.opponent,
            "oracle_answers": {str(m): q.to_json() for m, q in sorted(self.answers.items())},
            "replay_q": str(self.replay_q),
            "masses": {str(j): str(m) for j, m in sorted(self.masses.items())},
            "radius": str(self.radius), "closure_residual": str(self.closure_residual),
            "status": self.status,
        }


def _interval_distance(a: DyadicInterval, b: DyadicInterval) -> Fraction:
    """Largest distance between a point of a and a point of b."""
    return max(abs(a.hi.to_fraction() - b.lo.to_fraction()), abs(b.hi.to_fraction() - a.lo.to_fraction()))


def retune_bracket(a_prev: DyadicInterval, l_n: int) -> DyadicInterval:
    """Parameters within 2**-(3 l + 1) of the previous one, inside the depth-l
    dyadic cell of its midpoint and above the tip parameter."""
    l = max(l_n, 1)
    mid = a_prev.lo if a_prev.is_point() else a_prev.mid
    k = mid.scaled(l, "floor")
    cell = DyadicInterval(DyadicRational(k, l), DyadicRational(k + 1, l))
    hw = DyadicRational(1, 3 * l + 1)
    br = DyadicInterval(mid - hw, mid + hw).intersect(cell)
    tip = find_tip_c(256).hi
    lo, hi = max(br.lo, tip), min(br.hi, DyadicRational(4))
    return DyadicInterval(lo, hi)


def initial_state(bracket: DyadicInterval, config: GameConfig,
                  progress: Optional[Callable] = None) -> GameState:
    prof = PTildeProfile()
    tp = tune(bracket, prof.target(config.lead, config.lead_weight, config.stage_length),
              bits=config.bits, max_iter=config.max_iter, cache_dir=config.cache_dir,
              progress=progress)
    return GameState(tp, prof)


def make_tau(a, n: int, lead: int, bits: int = 64) -> TestFunction:
    """Separating test function around Per(2n - 1) clear of every other orbit
    with index below 10n and of the lead-in orbit."""
    return separating_tau(a, 2 * n - 1, (0, 10 * n), bits, avoid_extra=(lead,))


def play_round(state: GameState, opponent: Opponent, n: int, config: GameConfig,
               progress: Optional[Callable] = None):
    """One round: build tau, query the opponent, retune to falsify its answer.

    Returns (RoundRecord, new GameState)."""
    if n != state.profile.level + 1 or n > config.max_rounds or n > MAX_ROUNDS:
        raise InvalidInput(f"round {n} not playable at level {state.profile.level}")
    opponent = make_opponent(opponent)
    prev = state.tuned
    mu_prev = prev.achieved
    tau = make_tau(prev.a_star, n, config.lead, config.bits)
    idx = tau_index(tau)
    before = integrate(tau, mu_prev)
    if abs(before - state.profile.mass(2 * n - 1)) >= Fraction(1, 200 << n):
        raise SeparationImpossible(f"test function sees mass {float(before):.4g} before round {n}")
    eps = epsilon(n)
    handle = OracleHandle(prev.parameter)
    q = Fraction(opponent.estimate(tau, eps, handle))
    l_n = handle.deepest
    if progress:
        progress(f"round {n}: opponent {opponent.name} answered {float(q):.6g} reading {l_n} bits")
    case = 1 if q <= threshold(n) else 2
    s = 1 if case == 1 else 0
    profile = state.profile.decide(n, s)
    bracket = retune_bracket(prev.a_star, l_n)
    tp = tune(bracket, profile.target(config.lead, config.lead_weight, config.stage_length),
              l_n, parent=prev.parameter, bits=config.bits, max_iter=config.max_iter,
              cache_dir=config.cache_dir, progress=progress)
    answers = {m: tp.parameter.oracle(m) for m in range(1, l_n + 1)}
    replay = OracleHandle(answers, limit=l_n)
    replay_q = Fraction(make_opponent(opponent.identity()).estimate(tau, eps, replay))
    after = integrate(tau, tp.achieved)
    masses = _pair_masses(tp, profile, config.bits)
    rec = RoundRecord(n, idx, tau, q, list(handle.log), l_n, case, s, prev.a_star, tp.a_star,
                      bracket, tp.achieved, tp.period, before, after, abs(q - after),
                      opponent.identity(), answers, replay_q, masses, tp.radius,
                      tp.closure_residual)
    return rec, GameState(tp, profile, state.taus + [tau])


def _pair_masses(tp: TunedParameter, profile: PTildeProfile, bits: int) -> dict:
    out = {}
    for j in sorted(profile.masses):
        out[j] = mass_near(tp.achieved, cached_orbit(tp.a_star, j, bits).f_points, tp.radius)
    return out


# --------------------------------------------------------------------------
# transcripts

@dataclass
class GameTranscript:
    config: dict
    initial: dict
    rounds: list = field(default_factory=list)
    profile: PTildeProfile = field(default_factory=PTildeProfile)
    drift: list = field(default_factory=list)
    status: str = "complete"
    error: Optional[str] = None
    sidecar: dict = field(default_factory=dict)

    def final_cell(self) -> Optional[dict]:
        if not self.rounds:
            return self.initial.get("a")
        return self.rounds[-1].to_json()["a_after"]

    def to_json(self, sidecar: bool = True) -> dict:
        d = {"schema": SCHEMA, "config": _jsonable(self.config), "initial": self.initial,
             "rounds": [r.to_json() if isinstance(r, RoundRecord) else r for r in self.rounds],
             "profile": self.profile.to_json(), "drift": self.drift, "status": self.status,
             "error": self.error, "final_cell": self.final_cell(), "opponents_note": OPPONENT_NOTE}
        if sidecar:
            d["sidecar"] = self.sidecar
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1)


def run_game(initial_bracket: DyadicInterval, opponents: Sequence, rounds: int,
             config: Optional[GameConfig] = None, progress: Optional[Callable] = None) -> GameTranscript:
    """Play ``rounds`` rounds, round n against opponents[n - 1].

    A tuner failure ends the game; completed rounds are kept and the
    transcript is marked incomplete."""
    config = config or GameConfig(rounds=rounds, max_rounds=max(rounds, 1))
    if rounds > min(len(opponents), config.max_rounds, MAX_ROUNDS):
        raise InvalidInput("more rounds than opponents or the configured maximum")
    t0 = time.time()
    cfg = dict(config.to_json(), rounds=rounds,
               initial_bracket=initial_bracket.to_json(),
               opponents=[make_opponent(o).identity() for o in opponents[:rounds]])
    tr = GameTranscript(cfg, {})
    if rounds == 0:
        tr.sidecar = {"seconds": round(time.time() - t0, 3)}
        return tr
    state = initial_state(initial_bracket, config, progress)
    tr.initial = {"a": state.tuned.a_star.to_json(), "period": state.tuned.period,
                  "mu": state.tuned.achieved.to_json()}
    timings = {"initial": state.tuned.timing}
    for n in range(1, rounds + 1):
        try:
            rec, new = play_round(state, opponents[n - 1], n, config, progress)
        except (SearchError, PrecisionError) as exc:
            tr.status, tr.error = "incomplete", f"round {n}: {type(exc).__name__}: {exc}"
            tr.rounds.append({"n": n, "status": "incomplete", "error": str(exc)})
            break
        for k, tau_k in enumerate(state.taus + [rec.tau], start=1):
            if k >= n:
                break
            b, a = integrate(tau_k, state.tuned.achieved), integrate(tau_k, new.tuned.achieved)
            tr.drift.append({"n": n, "k": k, "before": str(b), "after": str(a),
                             "diff": str(abs(a - b)), "bound": str(Fraction(1, 1 << (3 * n)))})
        tr.rounds.append(rec)
        timings[f"round{n}"] = new.tuned.timing
        state = new
        tr.profile = state.profile
    timings["total"] = round(time.time() - t0, 3)
    tr.sidecar = {"seconds": timings}
    return tr


# --------------------------------------------------------------------------
# verification

def _dyadic(d) -> DyadicRational:
    return DyadicRational.from_json(d) if not isinstance(d, DyadicRational) else d


def _answer_fits(m: int, q: DyadicRational, iv: DyadicInterval) -> bool:
    try:
        LazyParameter._check_answer(m, q, iv)
    except LabError:
        return False
    return True


def verify_transcript(t, deep: bool = True) -> dict:
    """Recompute every round invariant from the raw transcript data.

    Stored margins, integrals and masses are never trusted: tau comes from
    its enumeration index, integrals from the embedded measures, the answer
    from replaying the opponent on the stored oracle answers.  With ``deep``
    the superattracting closure and the measure are recomputed from the
    parameter enclosure as well.
    """
    d = t.to_json() if isinstance(t, GameTranscript) else t
    out = {"schema": REPORT_SCHEMA, "rounds": [], "drift": [], "ok": True}
    if d.get("schema") != SCHEMA:
        out["ok"] = False
        out["error"] = f"unknown schema {d.get('schema')!r}"
        return out
    lead = d["config"].get("lead")
    mu_prev = DiscreteMeasure.from_json(d["initial"]["mu"]) if d.get("initial") else None
    a_prev = DyadicInterval.from_json(d["initial"]["a"]) if d.get("initial") else None
    taus, measures = [], [mu_prev]
    profile = PTildeProfile()
    for r in d["rounds"]:
        n = int(r["n"])
        if r.get("status") != "complete":
            out["rounds"].append({"n": n, "verdict": "INCOMPLETE", "checks": {}, "reasons": [r.get("error", "")]})
            out["ok"] = False
            continue
        checks, reasons = {}, []

        def check(name, cond, why):
            checks[name] = bool(cond)
            if not cond:
                reasons.append(why)

        eps = epsilon(n)
        q = Fraction(r["q"])
        tau = enumerate_tau(int(r["tau_index"]))
        stored = TestFunction.from_json(r["tau"])
        check("tau_index", tau.canonical() == stored.canonical(), "tau does not match its index")
        mu = DiscreteMeasure.from_json(r["mu_after"])
        a_before = DyadicInterval.from_json(r["a_before"])
        a_after = DyadicInterval.from_json(r["a_after"])
        check("a_before", a_prev is not None and a_before == a_prev, "round does not start where the last ended")
        value = integrate(tau, mu)
        margin = abs(q - value)
        check("margin", margin > eps, f"margin {float(margin):.4g} not above {float(eps):.4g}")
        case = 1 if q <= threshold(n) else 2
        check("case", case == r["case"] and r["s"] == (1 if case == 1 else 0), "case split inconsistent with q")
        if mu_prev is not None:
            pre = integrate(tau, mu_prev)
            check("pre_integral", abs(pre - profile.mass(2 * n - 1)) < Fraction(1, 200 << n),
                  "tau sees the undecided orbit before the round")
        l_n = int(r["l_n"])
        check("deepest_query", max(r["queries"], default=0) == l_n, "l_n is not the deepest query")
        check("move", _interval_distance(a_before, a_after) < Fraction(1, 1 << (3 * l_n)),
              "parameter moved by 2**-(3 l_n) or more")
        answers = {int(m): _dyadic(v) for m, v in r["oracle_answers"].items()}
        check("answers_complete", sorted(answers) == list(range(1, l_n + 1)), "oracle answers missing")
        ok_ans = all(_answer_fits(m, v, iv) for m, v in answers.items() for iv in (a_before, a_after))
        check("answers_valid", ok_ans, "stored oracle answers do not fit both parameters")
        try:
            rq = Fraction(make_opponent(r["opponent"]).estimate(tau, eps, OracleHandle(answers, limit=l_n)))
            check("replay", rq == q, "replayed opponent answer differs")
        except LabError as exc:
            check("replay", False, f"replay failed: {exc}")
        profile = profile.decide(n, r["s"]) if r["s"] in (0, 1) else profile
        if deep:
            try:
                cert = certify_closure(a_after, int(r["period"]), "")
                check("closure", Fraction(cert["residual"]) < 1, "closure residual too large")
                check("measure", achieved_measure(a_after, int(r["period"])) == mu,
                      "embedded measure differs from the recomputation")
                radius = _orbit_radius(a_after, sorted(set(range(1, 11)) | {lead} if lead else range(1, 11)), 64)
                tol = Fraction(1, 100 << n)
                bad = [j for j, m in profile.masses.items()
                       if abs(mass_near(mu, cached_orbit(a_after, j).f_points, radius) - m) > tol]
                check("profile", not bad, f"masses off profile near orbits {bad}")
            except LabError as exc:
                check("closure", False, f"recomputation failed: {exc}")
        fooled = all(checks.values())
        out["rounds"].append({"n": n, "verdict": "FOOLED" if fooled else "NOT-FOOLED",
                              "margin": str(margin), "epsilon": str(eps),
                              "realized_quarter": margin >= Fraction(1, 4 << n),
                              "checks": checks, "reasons": reasons})
        out["ok"] = out["ok"] and fooled
        taus.append(tau)
        measures.append(mu)
        # cross-round drift for every earlier test function
        for k, tau_k in enumerate(taus[:-1], start=1):
            diff = abs(integrate(tau_k, measures[-2]) - integrate(tau_k, mu))
            ok = diff < Fraction(1, 1 << (3 * n))
            out["drift"].append({"n": n, "k": k, "diff": str(diff), "ok": ok})
            out["ok"] = out["ok"] and ok
        mu_prev, a_prev = mu, a_after
    return out
