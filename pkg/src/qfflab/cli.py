"""Command-line front end: seeded experiment runs emitting JSON reports and CSV sweeps.

Exit codes: 0 run complete (whatever the verdict), 2 configuration error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import qff as qffmod
from . import testers
from .graph import Graph, GraphFormatError, load_graph, load_graph_json, parse_graph_spec

SCHEMA = "qfflab.report/1"
OUT_DIR_ENV = "QFFLAB_OUT_DIR"
FP_MODES = ("phased", "ideal")  # fixed-point amplification: phase sequence or exact 2-d rotation


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ helpers


def _positive_int(name):
    def conv(s):
        try:
            v = int(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {s!r}") from None
        if v < 0:
            raise argparse.ArgumentTypeError(f"{name} must be >= 0, got {v}")
        return v
    return conv


def _unit_interval(name):
    def conv(s):
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {s!r}") from None
        if not 0 < v < 1:
            raise argparse.ArgumentTypeError(f"{name} must lie in (0, 1), got {v}")
        return v
    return conv


def parse_t_range(text: str) -> list[int]:
    """``a..b`` is the doubling grid a, 2a, ... <= b; ``x,y,z`` is an explicit list."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            a, b = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"bad range {text!r}") from None
        if a < 1 or b < a:
            raise ConfigError(f"empty range {text!r}")
        out = []
        while a <= b:
            out.append(a)
            a *= 2
        return out
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad range {text!r}") from None
    if not vals:
        raise ConfigError("empty range")
    if min(vals) < 0:
        raise ConfigError("t values must be nonnegative")
    return vals


def load_graph_source(spec: str | None, path: str | None) -> tuple[Graph, str]:
    if (spec is None) == (path is None):
        raise ConfigError("give exactly one of --graph or --graph-file")
    try:
        if spec is not None:
            return parse_graph_spec(spec), spec
        text = Path(path).read_text()
        g = load_graph_json(text) if path.endswith(".json") else load_graph(text)
        return g, path
    except GraphFormatError as exc:
        where = f"{path}: " if path else ""
        raise ConfigError(f"{where}{exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read graph file: {exc}") from None


def _subseeds(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _freq(flags) -> dict:
    n = len(flags)
    p = sum(flags) / n if n else 0.0
    return {"count": int(sum(flags)), "n": n, "frequency": p,
            "stderr": math.sqrt(p * (1 - p) / n) if n else 0.0}


def _sum_ledgers(ledgers) -> dict:
    keys = ("qw_steps", "initial_reflections", "rw_steps", "graph_queries_charged")
    ledgers = list(ledgers)
    return {k: int(sum(l.get(k, 0) for l in ledgers)) for k in keys}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _config_echo(args) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def make_report(args, trials, aggregate, ledger, started) -> dict:
    import scipy
    return _jsonable({
        "schema": SCHEMA,
        "command": args.command + (f" {args.kind}" if getattr(args, "kind", None) else ""),
        "config": _config_echo(args),
        "trials": trials,
        "aggregate": aggregate,
        "ledger": ledger,
        "versions": {"qfflab": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "timing": {"elapsed_s": time.perf_counter() - started},
    })


# ----------------------------------------------------------------- commands


def cmd_fastforward(args) -> dict:
    started = time.perf_counter()
    g, gid = load_graph_source(args.graph, args.graph_file)
    if args.v >= g.n:
        raise ConfigError(f"--v {args.v} out of range for N={g.n}")
    ff = qffmod.FastForwarder(g, backend=args.backend, graph_id=gid)
    trials = []
    for i, rng in enumerate(_subseeds(args.seed, args.trials)):
        attempts = 1
        if args.algo == "qff":
            run = qffmod.qff(ff, args.v, args.t, args.eps, rng, oracle=not args.blind)
        elif args.algo == "qffg":
            run = qffmod.qffg(ff, args.v, args.t, args.eps, rng, oracle=not args.blind)
        else:
            try:
                run, attempts = qffmod.qff_las_vegas(ff, args.v, args.t, args.eps, rng,
                                                     args.max_attempts, oracle=not args.blind)
            except qffmod.LasVegasExhausted:
                trials.append({"trial": i, "success": False, "attempts": args.max_attempts,
                               "distance": None, "ledger": {}})
                continue
        trials.append({"trial": i, "success": run.success, "attempts": attempts,
                       "distance": run.distance, "tau": run.tau, "m": run.m,
                       "eps_prime": run.eps_prime, "predicted_success": run.predicted_success,
                       "ledger": run.ledger})
    dists = [r["distance"] for r in trials if r["success"]]
    agg = {"success": _freq([r["success"] for r in trials]),
           "max_distance": max(dists) if dists else None,
           "mean_attempts": float(np.mean([r["attempts"] for r in trials])),
           "predicted_success": trials[0].get("predicted_success") if trials else None}
    return make_report(args, trials, agg, _sum_ledgers(r["ledger"] for r in trials), started)


def _expansion_kw(args):
    return dict(upsilon=args.upsilon, eps=args.eps, mu=args.mu, mode=args.mode)


def cmd_test(args) -> dict:
    started = time.perf_counter()
    g, _ = load_graph_source(args.graph, args.graph_file)
    trials, verdicts, ledgers = [], [], []
    for i, rng in enumerate(_subseeds(args.seed, args.runs)):
        if args.kind == "expansion":
            rep = testers.test_expansion(g, rng=rng, **_expansion_kw(args))
            rec = rep.to_json()
        elif args.kind == "classical-gr":
            rep = testers.classical_gr_expansion(g, rng=rng, **_expansion_kw(args))
            rec = rep.to_json()
        elif args.kind == "clusterability":
            p = testers.ClusterParams(args.k, args.phi_in, c_prime=args.c_prime,
                                      fp_mode=args.fp_mode)
            rep = testers.test_clusterability(g, args.k, args.phi_in, args.eps, rng, params=p)
            rec = rep.to_json()
        else:
            for node in (args.u, args.v):
                if node is None or not 0 <= node < g.n:
                    raise ConfigError("classify needs --u and --v inside [0, N)")
            p = testers.ClusterParams(args.k, args.phi_in, c_prime=args.c_prime,
                                      fp_mode=args.fp_mode)
            c = testers.classify_nodes(g, args.u, args.v, p, rng)
            rec = {"verdict": c.label, "estimate": c.estimate, "band": c.band, "t": c.t,
                   "ledger": c.distance.ledger if c.distance else {}}
        rec["run"] = i
        trials.append(rec)
        verdicts.append(rec["verdict"])
        ledgers.append(rec["ledger"])
    counts = {v: verdicts.count(v) for v in sorted(set(verdicts))}
    agg = {"verdict": max(counts, key=lambda v: (counts[v], v)), "counts": counts,
           "frequencies": {v: c / len(verdicts) for v, c in counts.items()}}
    return make_report(args, trials, agg, _sum_ledgers(ledgers), started)


def cmd_estimate(args) -> dict:
    started = time.perf_counter()
    g, _ = load_graph_source(args.graph, args.graph_file)
    trials = []
    if args.kind in ("norm", "norm-mult"):
        if not 0 <= args.s < g.n:
            raise ConfigError(f"--s {args.s} out of range for N={g.n}")
        truth = testers.exact_norm(g, args.s, args.t)
        fn = testers.estimate_norm if args.kind == "norm" else testers.estimate_norm_multiplicative
        bound = args.eps if args.kind == "norm" else args.eps * truth
        for i, rng in enumerate(_subseeds(args.seed, args.trials)):
            e = fn(g, args.s, args.t, args.eps, args.delta, rng)
            trials.append({"trial": i, "estimate": e.a, "error": abs(e.a - truth),
                           "within": abs(e.a - truth) <= bound, "warning": e.warning,
                           "ledger": e.ledger})
    else:
        if args.u is None or args.v is None or args.u == args.v:
            raise ConfigError("distance needs distinct --u and --v")
        truth = testers.exact_distance_sq(g, args.u, args.v, args.t)
        eps = args.eps
        for i, rng in enumerate(_subseeds(args.seed, args.trials)):
            e = testers.estimate_distance(g, args.u, args.v, args.t, eps, args.delta, rng,
                                          fp_mode=args.fp_mode)
            trials.append({"trial": i, "estimate": e.a, "error": abs(e.a - truth),
                           "within": abs(e.a - truth) <= eps, "warning": e.warning,
                           "alpha": e.alpha, "beta": e.beta, "gamma": e.gamma,
                           "ledger": e.ledger})
    est = [r["estimate"] for r in trials]
    agg = {"oracle": truth, "mean_estimate": float(np.mean(est)),
           "stderr_estimate": float(np.std(est) / math.sqrt(len(est))) if len(est) > 1 else 0.0,
           "within_bound": _freq([r["within"] for r in trials])}
    return make_report(args, trials, agg, _sum_ledgers(r["ledger"] for r in trials), started)


SWEEP_FIELDS = ["t", "estimate", "oracle", "error", "qw_steps", "classical_estimate",
                "classical_steps"]


def cmd_sweep(args) -> str:
    g, _ = load_graph_source(args.graph, args.graph_file)
    ts = parse_t_range(args.t_range)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    w.writeheader()
    for t, rng in zip(ts, _subseeds(args.seed, len(ts))):
        truth = testers.exact_norm(g, args.s, t)
        e = testers.estimate_norm(g, args.s, t, args.eps, args.delta, rng)
        led = testers.CostLedger(d=g.d)
        c = testers.classical_norm_collisions(g, args.s, t, args.walks, rng, led)
        w.writerow({"t": t, "estimate": repr(e.a), "oracle": repr(truth),
                    "error": repr(abs(e.a - truth)), "qw_steps": e.ledger["qw_steps"],
                    "classical_estimate": repr(math.sqrt(c)), "classical_steps": led.rw_steps})
    return buf.getvalue()


# ------------------------------------------------------------------- parser


def _graph_args(p):
    p.add_argument("--graph", help="generator spec such as cycle:32 or dumbbell:16,3,1")
    p.add_argument("--graph-file", help="edge-list (or .json) graph document")
    p.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")
    p.add_argument("--out", help="report path; defaults to $%s/<command>-<seed>.* or stdout"
                   % OUT_DIR_ENV)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qfflab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fastforward", help="run QFF, amplified QFF or the repeat-until-success loop")
    _graph_args(p)
    p.add_argument("--t", type=_positive_int("--t"), required=True)
    p.add_argument("--eps", type=_unit_interval("--eps"), required=True)
    p.add_argument("--algo", choices=["qff", "qffg", "las-vegas"], default="qffg")
    p.add_argument("--v", type=_positive_int("--v"), default=0, help="start node")
    p.add_argument("--trials", type=_positive_int("--trials"), default=1)
    p.add_argument("--max-attempts", type=_positive_int("--max-attempts"), default=64)
    p.add_argument("--blind", action="store_true", help="use N^-1/2 instead of the exact norm")
    p.add_argument("--backend", choices=["reduced", "full"], default="reduced")
    p.set_defaults(func=cmd_fastforward)

    p = sub.add_parser("test", help="property testers")
    tsub = p.add_subparsers(dest="kind", required=True)
    for kind in ("expansion", "classical-gr"):
        q = tsub.add_parser(kind)
        _graph_args(q)
        q.add_argument("--upsilon", type=float, required=True)
        q.add_argument("--eps", type=_unit_interval("--eps"), required=True)
        q.add_argument("--mu", type=float, default=0.1)
        q.add_argument("--mode", choices=["desk", "paper"], default="desk")
        q.add_argument("--runs", type=_positive_int("--runs"), default=1)
        q.set_defaults(func=cmd_test)
    for kind in ("clusterability", "classify"):
        q = tsub.add_parser(kind)
        _graph_args(q)
        q.add_argument("--k", type=int, required=True)
        q.add_argument("--phi-in", type=float, required=True)
        q.add_argument("--c-prime", type=float, default=1.0)
        q.add_argument("--eps", type=float, default=0.1)
        q.add_argument("--runs", type=_positive_int("--runs"), default=1)
        q.add_argument("--fp-mode", choices=FP_MODES, default="phased")
        if kind == "classify":
            q.add_argument("--u", type=int, required=True)
            q.add_argument("--v", type=int, required=True)
        q.set_defaults(func=cmd_test)

    p = sub.add_parser("estimate", help="norm and distance estimators")
    esub = p.add_subparsers(dest="kind", required=True)
    for kind in ("norm", "norm-mult", "distance"):
        q = esub.add_parser(kind)
        _graph_args(q)
        q.add_argument("--t", type=_positive_int("--t"), required=True)
        q.add_argument("--eps", type=_unit_interval("--eps"), required=True)
        q.add_argument("--delta", type=_unit_interval("--delta"), default=0.1)
        q.add_argument("--trials", type=_positive_int("--trials"), default=1)
        if kind == "distance":
            q.add_argument("--fp-mode", choices=FP_MODES, default="phased")
            q.add_argument("--u", type=int, required=True)
            q.add_argument("--v", type=int, required=True)
        else:
            q.add_argument("--s", type=_positive_int("--s"), default=0)
        q.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="CSV of norm estimates and costs over a t grid")
    _graph_args(p)
    p.add_argument("--t-range", required=True, help="a..b (doubling grid) or a comma list")
    p.add_argument("--eps", type=_unit_interval("--eps"), default=0.1)
    p.add_argument("--delta", type=_unit_interval("--delta"), default=0.1)
    p.add_argument("--s", type=_positive_int("--s"), default=0)
    p.add_argument("--walks", type=int, default=64, help="classical walks per grid point")
    p.set_defaults(func=cmd_sweep)
    return ap


def _emit(args, payload: str, ext: str) -> None:
    out = args.out
    if out is None and os.environ.get(OUT_DIR_ENV):
        name = args.command + (f"-{args.kind}" if getattr(args, "kind", None) else "")
        out = str(Path(os.environ[OUT_DIR_ENV]) / f"{name}-{args.seed}.{ext}")
    if out is None:
        sys.stdout.write(payload)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(payload)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "trials", 1) == 0 or getattr(args, "runs", 1) == 0:
            raise ConfigError("trial count must be at least 1")
        result = args.func(args)
    except ValueError as exc:
        print(f"qfflab: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"qfflab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    if isinstance(result, str):
        _emit(args, result, "csv")
    else:
        _emit(args, json.dumps(result, indent=2, sort_keys=True) + "\n", "json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
