"""``sandpile`` command-line front end.

Exit codes: 0 success, 1 a verify check failed, 2 usage or validation error.
With ``--out FILE`` the resolved configuration goes to ``FILE.meta.json``;
without it, results go to stdout and the metadata line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .chains import drive, drive_general, micro_batch
from .errors import SandpileError
from .graph import build_graph, parse_graph_spec
from .oracle import (
    micro_absorption_distribution,
    sampler_distribution,
    state_cap,
    stationary_distribution,
    transition_matrix,
)
from .rng import derive_seed
from .sampler import sample_batch
from . import verify as V


class UsageError(Exception):
    def __init__(self, flag: str, msg: str):
        super().__init__(f"{flag}: {msg}")


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _graph(flag: str, spec: str):
    try:
        return parse_graph_spec(spec)
    except (SandpileError, OSError, json.JSONDecodeError) as exc:
        raise UsageError(flag, str(exc)) from None


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=V._json_default)


def _emit(args, text: str, meta: dict):
    meta = {"command": args.command, "version": __version__, "backend": _backend.BACKEND,
            "python": platform.python_version(), **meta}
    if args.out:
        Path(args.out).write_text(text)
        Path(args.out + ".meta.json").write_text(_dumps(meta) + "\n")
    else:
        sys.stdout.write(text)
        sys.stderr.write(json.dumps(meta, sort_keys=True, default=V._json_default) + "\n")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- validate -------------------------------------------------------------


def collapse_boundary(n_total: int, edges, boundary) -> tuple[int, list, list]:
    """Merge every ``boundary`` vertex into one sink.

    Remaining vertices keep their relative order and are renumbered
    ``0..n-1``; the sink becomes ``n``. Returns ``(n, edges, old_ids)``.
    """
    bset = set(boundary)
    if not bset:
        raise ValueError("boundary set is empty")
    if any(not 0 <= b < n_total for b in bset):
        raise ValueError("boundary vertex out of range")
    keep = [v for v in range(n_total) if v not in bset]
    n = len(keep)
    relabel = {v: i for i, v in enumerate(keep)}
    relabel.update({b: n for b in bset})
    out = []
    for u, v in edges:
        if not (0 <= u < n_total and 0 <= v < n_total):
            raise ValueError(f"edge ({u}, {v}) out of range")
        a, b = relabel[u], relabel[v]
        if a == n and b == n:
            continue
        out.append((a, b))
    return n, out, keep


def cmd_validate(args) -> int:
    if args.collapse:
        data = json.loads(Path(args.collapse).read_text())
        try:
            n, edges, keep = collapse_boundary(data["n_total"], data["edges"], data["boundary"])
        except (KeyError, ValueError) as exc:
            raise UsageError("--collapse", str(exc)) from None
        try:
            g = build_graph(n, edges, name=f"collapsed:{args.collapse}")
        except SandpileError as exc:
            raise UsageError("--collapse", str(exc)) from None
        report = {**g.to_json(), "old_ids": keep}
    elif args.graph:
        g = _graph("--graph", args.graph)
        report = {"name": g.name, "n": g.n_vertices, "sink": g.sink_id,
                  "degrees": g.degrees.tolist(), "edges": g.to_json()["edges"], "valid": True}
    else:
        raise UsageError("--graph", "one of --graph or --collapse is required")
    _emit(args, _dumps(report) + "\n", {"graph": g.name})
    return 0


# -- sample ---------------------------------------------------------------


def cmd_sample(args) -> int:
    g = _graph("--graph", args.graph)
    k = args.threshold
    if k < 2:
        raise UsageError("--threshold", "must be >= 2")
    rows = sample_batch(g, k, args.seed, args.reps, workers=args.workers)
    totals = rows.sum(axis=1)
    counts = np.bincount(totals, minlength=g.n_vertices * (k - 1) + 1)
    meta = {"graph": g.name, "threshold": k, "reps": args.reps, "seed": args.seed,
            "seed_rule": "replica i uses derive_seed(seed, i)",
            "replica_seed_first": derive_seed(args.seed, 0)}
    fmt = args.format or ("csv" if (args.out or "").endswith(".csv") else "json")
    if fmt == "csv":
        text = _csv(["total_particles", "probability"],
                    [(t, repr(float(c) / args.reps)) for t, c in enumerate(counts)])
    else:
        body = {"histogram": [[t, float(c) / args.reps] for t, c in enumerate(counts)],
                "counts": counts.tolist()}
        if args.reps == 1:
            body["config"] = {"k": k, "eta": rows[0].tolist()}
        text = _dumps(body) + "\n"
    _emit(args, text, meta)
    return 0


# -- drive / micro ---------------------------------------------------------


def _general_start(n: int, k: int, total: int) -> np.ndarray:
    """Stable start with ``total`` particles: fill sites ``0, 1, ...`` up to ``k - 1``."""
    if not 0 <= total <= n * (k - 1):
        raise UsageError("--init", f"must lie in 0..{n * (k - 1)} for a stable start")
    eta = np.zeros(n, dtype=np.int64)
    full, rest = divmod(total, k - 1)
    eta[:full] = k - 1
    if rest:
        eta[full] = rest
    return eta


def cmd_drive(args) -> int:
    meta = {"steps": args.steps, "burnin": args.burnin, "record_every": args.record_every,
            "seed": args.seed, "init": args.init}
    if args.complete is not None:
        if args.graph:
            raise UsageError("--graph", "use either --complete or --graph")
        N = args.complete
        if N < 2:
            raise UsageError("--complete", "N must be >= 2")
        if not 0 <= args.init <= N - 1:
            raise UsageError("--init", f"must lie in 0..{N - 1}")
        tr = drive(N, args.init, args.steps, args.burnin, args.record_every, args.seed)
        meta.update({"path": "micro", "N": N, "threshold": 2,
                     "seed_rule": "one SplitMix64 stream seeded with seed across all steps"})
    elif args.graph:
        g = _graph("--graph", args.graph)
        k = args.threshold
        if k < 2:
            raise UsageError("--threshold", "must be >= 2")
        eta0 = _general_start(g.n_vertices, k, args.init)
        tr, _ = drive_general(g, k, eta0, args.steps, args.burnin, args.record_every, args.seed,
                              add_on_v_only=args.add_on_v_only)
        meta.update({"path": "general", "graph": g.name, "threshold": k, "eta0": eta0.tolist(),
                     "add_on_v_only": args.add_on_v_only,
                     "seed_rule": "step t uses derive_seed(seed, t)"})
    else:
        raise UsageError("--complete", "one of --complete or --graph is required")
    text = _csv(["step", "xi", "sink_exits"], zip(tr.times.tolist(), tr.xi.tolist(), tr.sink_exits.tolist()))
    _emit(args, text, meta)
    return 0


def cmd_micro(args) -> int:
    try:
        runs = micro_batch(args.N, args.x0, args.y0, args.seed, args.trials, workers=args.workers)
    except SandpileError as exc:
        raise UsageError("--x0/--y0", str(exc)) from None
    cols = ("x", "tau0", "sink_exits", "peak_y")
    text = _csv(("trial",) + cols, zip(range(args.trials), *(runs[c].tolist() for c in cols)))
    _emit(args, text, {"N": args.N, "x0": args.x0, "y0": args.y0, "trials": args.trials, "seed": args.seed,
                       "seed_rule": "run i uses derive_seed(seed, i)"})
    return 0


# -- oracle ---------------------------------------------------------------


def cmd_oracle(args) -> int:
    meta = {"target": args.target, "state_cap": state_cap()}
    if args.target == "micro-absorption":
        if args.N is None or args.x0 is None or args.y0 is None:
            raise UsageError("--N", "micro-absorption needs --N, --x0 and --y0")
        out = micro_absorption_distribution(args.N, args.x0, args.y0).to_json()
        meta.update({"N": args.N, "x0": args.x0, "y0": args.y0})
    else:
        if not args.graph:
            raise UsageError("--graph", f"{args.target} needs --graph")
        g = _graph("--graph", args.graph)
        k = args.threshold
        if k < 2:
            raise UsageError("--threshold", "must be >= 2")
        meta.update({"graph": g.name, "threshold": k, "order": args.order})
        if args.target == "sampler-dist":
            out = sampler_distribution(g, k, order=args.order).to_json()
        else:
            Q = transition_matrix(g, k, add_on_v_only=args.add_on_v_only, order=args.order)
            meta["add_on_v_only"] = args.add_on_v_only
            if args.target == "qmatrix":
                out = {"states": [list(s) for s in Q.states], "matrix": Q.matrix.tolist()}
            else:
                out = stationary_distribution(Q).to_json()
    _emit(args, _dumps(out) + "\n", meta)
    return 0


# -- verify ---------------------------------------------------------------

DETERMINISTIC = {"exact-sampling", "generic-k-sampling", "micro-macro"}


def cmd_verify(args) -> int:
    names = list(V.CHECKS) if args.tests == ["all"] else args.tests
    for name in names:
        if name not in V.CHECKS:
            raise UsageError("test", f"unknown check {name!r}; choose from {', '.join(V.CHECKS)} or all")
    if args.seed is None and any(n not in DETERMINISTIC for n in names):
        raise UsageError("--seed", "randomized checks require an explicit --seed")
    kw = {"suite": args.suite, "workers": args.workers}
    if args.reps:
        kw["reps"] = args.reps
    if args.cases:
        kw["cases"] = args.cases
    results = [V.CHECKS[n](args.seed, **kw) for n in names]
    for r in results:
        print(r.line(), file=sys.stderr)
    _emit(args, V.dumps(results) + "\n", {"tests": names, "seed": args.seed, "suite": args.suite})
    return 0 if all(r.passed or r.exploratory for r in results) else 1


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sandpile", description="Stochastic sandpile simulation and exact checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_required=True):
        sp.add_argument("--out", help="output file (metadata goes to OUT.meta.json)")
        if seed_required is not None:
            sp.add_argument("--seed", type=_seed, required=seed_required, default=None)
        sp.add_argument("--workers", type=_positive, default=1)

    sp = sub.add_parser("validate", help="validate a graph or collapse a multi-boundary graph")
    sp.add_argument("--graph")
    sp.add_argument("--collapse", metavar="JSON", help='file with {"n_total", "edges", "boundary"}')
    common(sp, seed_required=None)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("sample", help="exact stationary samples")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--threshold", type=int, default=2)
    sp.add_argument("--reps", type=_positive, required=True)
    sp.add_argument("--format", choices=("csv", "json"))
    common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("drive", help="driven-dissipative trace")
    sp.add_argument("--complete", type=int, metavar="N")
    sp.add_argument("--graph")
    sp.add_argument("--threshold", type=int, default=2)
    sp.add_argument("--steps", type=_nonneg, required=True)
    sp.add_argument("--burnin", type=_nonneg, default=0)
    sp.add_argument("--init", type=_nonneg, default=0)
    sp.add_argument("--record-every", type=_positive, default=1)
    sp.add_argument("--add-on-v-only", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_drive)

    sp = sub.add_parser("micro", help="micro chain runs to absorption")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--x0", type=int, required=True)
    sp.add_argument("--y0", type=int, required=True)
    sp.add_argument("--trials", type=_positive, required=True)
    common(sp)
    sp.set_defaults(func=cmd_micro)

    sp = sub.add_parser("oracle", help="exact laws by linear solves")
    sp.add_argument("target", choices=("stationary", "sampler-dist", "micro-absorption", "qmatrix"))
    sp.add_argument("--graph")
    sp.add_argument("--threshold", type=int, default=2)
    sp.add_argument("--order", choices=("lowest", "fifo"), default="lowest")
    sp.add_argument("--add-on-v-only", action="store_true")
    sp.add_argument("--N", type=int)
    sp.add_argument("--x0", type=int)
    sp.add_argument("--y0", type=int)
    common(sp, seed_required=None)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("verify", help="run named checks")
    sp.add_argument("tests", nargs="+", help=f"check names ({', '.join(V.CHECKS)}) or all")
    sp.add_argument("--suite", default="small", choices=("small", "tiny"))
    sp.add_argument("--reps", type=_positive)
    sp.add_argument("--cases", type=_positive)
    common(sp, seed_required=False)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sandpile {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (SandpileError, OSError, json.JSONDecodeError) as exc:
        print(f"sandpile {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


run_cli = main

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
