"""Command-line front end.

Every command writes one JSON document (or CSV rows) holding the resolved
configuration and the result.  Numbers are exact strings.  Wall-clock data
sits in the ``sidecar`` field, which the ``digest`` field does not cover.
Flags can be preset through LOGISTICLAB_<FLAG> environment variables.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__
from .errors import InvalidInput, LabError, VerificationError
from .measures import _jsonable

ENV_PREFIX = "LOGISTICLAB_"
OUTPUT_SCHEMA = "logisticlab-output/1"


def _env(name: str, default):
    v = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if v is None:
        return default
    return type(default)(v) if default is not None and not isinstance(default, str) else v


def _num(s: str) -> Fraction:
    from .numerics import as_fraction
    return as_fraction(s)


def _pair(s: str):
    parts = s.split(",")
    if len(parts) != 2:
        raise InvalidInput(f"expected lo,hi but got {s!r}")
    return _num(parts[0]), _num(parts[1])


def _interval(s: str, bits: int = 64):
    """Search window from "lo,hi"; non-dyadic ends are rounded inward."""
    from .numerics import DyadicInterval, DyadicRational
    lo, hi = _pair(s)
    lo, hi = DyadicRational.round(lo, bits, "ceil"), DyadicRational.round(hi, bits, "floor")
    if not lo < hi:
        raise InvalidInput(f"empty window {s!r}")
    return DyadicInterval(lo, hi)


def _profile_entries(s: str):
    out = []
    for item in s.split(","):
        n, _, l = item.partition(":")
        out.append((int(n), _num(l)))
    return tuple(out)


def _load_json(path: str):
    with open(path) as fh:
        d = json.load(fh)
    # accept both bare objects and wrapped command output
    return d["result"] if isinstance(d, dict) and d.get("schema") == OUTPUT_SCHEMA else d


# --------------------------------------------------------------------------
# commands

def cmd_orbit(args):
    from .numerics import DyadicInterval, as_interval, mpz, orbit_fixed
    a, x = as_interval(_num(args.a)), as_interval(_num(args.x0))
    if a.lo < 0 or a.hi > 4:
        raise InvalidInput("parameter must lie in [0, 4]")
    if x.lo < 0 or x.hi > 1:
        raise InvalidInput("point must lie in [0, 1]")
    if args.n < 0:
        raise InvalidInput("n must be non-negative")
    w = args.work_bits or 2 * args.n + 64
    al, ah = a.fixed(w)
    xl, xh = x.fixed(w)
    pts = orbit_fixed(mpz(al), mpz(ah), mpz(xl), mpz(xh), args.n, w)
    rows = []
    for k, (l, h) in enumerate(pts[1:], start=1):
        iv = DyadicInterval.from_fixed(l, h, w)
        rows.append({"k": k, "lo": iv.lo.decimal(), "hi": iv.hi.decimal(),
                     "width": (iv.hi - iv.lo).decimal()})
    return {"rows": rows, "work_bits": w}


def cmd_measure(args):
    from .measures import birkhoff_measure, monte_carlo_measure
    a = _num(args.a)
    if args.kind == "birkhoff":
        mu = birkhoff_measure(a, _num(args.x0), args.n)
    else:
        mu = monte_carlo_measure(a, args.k, args.n, args.seed, engine=args.engine)
    return {"measure": mu.to_json(), "mean": str(mu.mean()), "atoms": len(mu)}


def cmd_w1(args):
    from .measures import DiscreteMeasure, w1
    mu = DiscreteMeasure.from_json(_measure_json(_load_json(args.first)))
    nu = DiscreteMeasure.from_json(_measure_json(_load_json(args.second)))
    return {"w1": str(w1(mu, nu))}


def _measure_json(d):
    if isinstance(d, dict) and isinstance(d.get("atoms"), list):
        return d
    for key in ("measure", "mu", "achieved", "sink_measure"):
        if isinstance(d, dict) and isinstance(d.get(key), dict):
            return d[key]
    raise InvalidInput("file holds no measure")


def cmd_periodic(args):
    from .dynamics import cached_orbit
    orb = cached_orbit(_num(args.a), args.index, args.bits)
    d = orb.to_json()
    d["letters"] = orb.f_letters()
    return d


def cmd_stage(args):
    from .dynamics import solve_stage
    return solve_stage(_num(args.a), args.bits).to_json()


def cmd_tip_c(args):
    from .dynamics import find_tip_c, tip_certificate
    c = find_tip_c(args.bits)
    cert = tip_certificate(c, args.bits)
    return {"c": c.to_json(), "lo": c.lo.decimal(), "hi": c.hi.decimal(),
            "residual": str(cert["residual"]), "fold_certified": cert["fold_certified"],
            "g_half_distinct": cert["g_half_distinct"]}


def cmd_sink_find(args):
    from .sink import certify_sink, closure_residual, find_superattracting
    win = _interval(args.window)
    enc = find_superattracting(win, args.period, args.bits)
    out = {"enclosure": enc.to_json(), "lo": enc.lo.decimal(), "hi": enc.hi.decimal(),
           "residual": str(closure_residual(enc, args.period))}
    if args.samples:
        cert = certify_sink(enc, samples=args.samples, seed=args.seed)
        out["certificate"] = cert.to_json()
        out["basin_fraction"] = str(cert.basin_fraction())
    return out


def _default_bracket():
    from .dynamics import find_tip_c
    from .numerics import DyadicInterval, DyadicRational
    return DyadicInterval(find_tip_c(256).hi, DyadicRational(4))


def cmd_tune(args):
    from .tuner import TargetProfile, tune
    prof = TargetProfile(_profile_entries(args.profile), _num(args.tol))
    br = _interval(args.bracket) if args.bracket else _default_bracket()
    tp = tune(br, prof, bits=args.bits, cache_dir=args.cache_dir, progress=_progress(args))
    args._sidecar["tune_seconds"] = tp.timing
    d = tp.to_json()
    d["period"] = tp.period
    return d


def cmd_game(args):
    from .game import GameConfig, derive_seed, make_opponent, run_game
    specs = args.opponent or ["birkhoff"]
    if len(specs) == 1:
        specs = specs * args.rounds
    opps = []
    for n, spec in enumerate(specs, start=1):
        o = make_opponent(spec)
        if "seed=" not in spec:
            o.seed = derive_seed(args.seed, "opponent", n)
        opps.append(o)
    br = _interval(args.bracket) if args.bracket else _default_bracket()
    cfg = GameConfig(rounds=args.rounds, max_rounds=max(args.rounds, 1), bits=args.bits,
                     cache_dir=args.cache_dir)
    tr = run_game(br, opps, args.rounds, cfg, progress=_progress(args))
    args._sidecar["game"] = tr.sidecar
    return tr.to_json(sidecar=False)


def cmd_verify(args):
    from .game import SCHEMA as GAME_SCHEMA, verify_transcript
    from .tuner import SCHEMA as TUNE_SCHEMA, TunedParameter, verify_tuned
    d = _load_json(args.file)
    if d.get("schema") == GAME_SCHEMA:
        rep = verify_transcript(d, deep=not args.shallow)
        if not rep["ok"]:
            raise _VerifyFailed(rep)
        return rep
    if d.get("schema") == TUNE_SCHEMA:
        cert = verify_tuned(TunedParameter.from_json(d))
        return {"ok": True, "period": cert["period"], "residual": str(cert["residual"])}
    raise InvalidInput("file is neither a game transcript nor a tuned parameter")


class _VerifyFailed(VerificationError):
    def __init__(self, report):
        super().__init__("verification failed")
        self.report = report


def cmd_tau(args):
    from .measures import enumerate_tau, separating_tau, tau_index
    if args.action == "enumerate":
        tau = enumerate_tau(args.index)
        return {"index": str(args.index), "tau": tau.to_json()}
    lo, hi = (int(v) for v in args.avoid.split(","))
    tau = separating_tau(_num(args.a), args.target, (lo, hi), args.bits)
    return {"index": str(tau_index(tau)), "tau": tau.to_json()}


# --------------------------------------------------------------------------
# plumbing

def _progress(args):
    if not args.verbose:
        return None
    return lambda msg: print(msg, file=sys.stderr, flush=True)


def _csv_rows(result):
    if isinstance(result, dict) and "rows" in result:
        return result["rows"]
    if isinstance(result, dict) and "measure" in result:
        return [{"x": a["x"]["num"] + "/2^" + str(a["x"]["exp"]), "w": a["w"]}
                for a in result["measure"]["atoms"]]
    return [{"key": k, "value": json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v}
            for k, v in sorted(result.items())]


def canonical(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k not in ("sidecar", "digest")}
    return json.dumps(body, sort_keys=True, separators=(",", ":"))


def render(doc: dict, fmt: str) -> str:
    if fmt == "csv":
        rows = _csv_rows(doc["result"])
        buf = io.StringIO()
        if rows:
            wr = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            wr.writeheader()
            wr.writerows(rows)
        return buf.getvalue()
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


COMMANDS = {
    "orbit": cmd_orbit, "measure": cmd_measure, "w1": cmd_w1, "periodic": cmd_periodic,
    "stage": cmd_stage, "tip-c": cmd_tip_c, "sink-find": cmd_sink_find, "tune": cmd_tune,
    "game": cmd_game, "verify": cmd_verify, "tau": cmd_tau,
}


def _global_flags(p, defaults: bool):
    d = (lambda name, v: _env(name, v)) if defaults else (lambda name, v: argparse.SUPPRESS)
    p.add_argument("--bits", type=int, default=d("bits", 64), help="target precision in bits")
    p.add_argument("--seed", type=int, default=d("seed", 0), help="master seed")
    p.add_argument("--cache-dir", default=d("cache_dir", None), help="tuner cache directory")
    p.add_argument("--out", default=d("out", None), help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=d("format", "json"))
    p.add_argument("-v", "--verbose", action="store_true",
                   default=False if defaults else argparse.SUPPRESS, help="progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logisticlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    _global_flags(p, defaults=True)
    # the same flags are accepted after the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, defaults=False)
    sub = p.add_subparsers(dest="command", required=True)
    sub_add = sub.add_parser

    def add_parser(name, **kw):
        return sub_add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    s = sub.add_parser("orbit", help="certified orbit enclosures")
    s.add_argument("--a", required=True)
    s.add_argument("--x0", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--work-bits", type=int, default=None)

    s = sub.add_parser("measure", help="empirical measures")
    s.add_argument("kind", choices=("birkhoff", "mc"))
    s.add_argument("--a", required=True)
    s.add_argument("--x0", default="1/3")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--engine", choices=("auto", "certified", "float"), default="auto")

    s = sub.add_parser("w1", help="Wasserstein-1 distance of two measure files")
    s.add_argument("first")
    s.add_argument("second")

    s = sub.add_parser("periodic", help="periodic orbit Per_a(n)")
    s.add_argument("--a", required=True)
    s.add_argument("--index", "-n", type=int, required=True)

    s = sub.add_parser("stage", help="third-iterate stage landmarks")
    s.add_argument("--a", required=True)

    sub.add_parser("tip-c", help="tip parameter enclosure")

    s = sub.add_parser("sink-find", help="superattracting parameter in a window")
    s.add_argument("--period", type=int, required=True)
    s.add_argument("--window", required=True, help="lo,hi")
    s.add_argument("--samples", type=int, default=0, help="basin samples for a sink certificate")

    s = sub.add_parser("tune", help="tune a parameter to a mass profile")
    s.add_argument("--profile", required=True, help="n:weight,... e.g. 1:1/2,3:1/2")
    s.add_argument("--tol", default="1/8")
    s.add_argument("--bracket", default=None, help="lo,hi (default: above the tip parameter)")

    s = sub.add_parser("game", help="play the fooling game")
    s.add_argument("--rounds", type=int, default=2)
    s.add_argument("--opponent", action="append",
                   help="name[:k=v,...]; repeat per round (constant, birkhoff, adaptive)")
    s.add_argument("--bracket", default=None)

    s = sub.add_parser("verify", help="verify a game transcript or tuned parameter")
    s.add_argument("file")
    s.add_argument("--shallow", action="store_true", help="skip closure and measure recomputation")

    s = sub.add_parser("tau", help="test function enumeration")
    s.add_argument("action", choices=("enumerate", "separating"))
    s.add_argument("--index", type=int, default=1)
    s.add_argument("--a", default="3.9")
    s.add_argument("--target", type=int, default=1)
    s.add_argument("--avoid", default="1,10")
    return p


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if not k.startswith("_") and k != "verbose"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._sidecar = {}
    t0 = time.time()
    doc = {"schema": OUTPUT_SCHEMA, "command": args.command, "config": _config(args),
           "version": __version__}
    code = 0
    try:
        doc["result"] = _jsonable(COMMANDS[args.command](args))
    except _VerifyFailed as exc:
        doc["result"] = exc.report
        code = exc.exit_code
    except LabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    doc["digest"] = hashlib.sha256(canonical(doc).encode()).hexdigest()
    doc["sidecar"] = dict(args._sidecar, timestamp=datetime.now(timezone.utc).isoformat(),
                          seconds=round(time.time() - t0, 3))
    text = render(doc, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
