"""Compare the compiled and pure-Python kernels on the hot loops.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Workloads are sized so the Python backend finishes in seconds; the
reported figure is the best wall time over ``--repeat`` runs.
"""

import argparse
import json
import time

import numpy as np

from sandpile import _backend
from sandpile.graph import complete_graph, grid_graph


def workloads(mod):
    g = grid_graph(8, 8)
    ptr, idx = g.csr
    out = np.zeros((200, g.n_vertices), np.int64)
    gc = complete_graph(200)
    pc, ic = gc.csr
    xs = [np.zeros(20_000, np.int64) for _ in range(4)]
    return {
        "exact_sample_batch grid:8x8 k=2 x200": lambda: mod.exact_sample_batch(ptr, idx, 2, 1, 0, out, 10**9),
        "drive_general complete:200 x2000": lambda: mod.drive_general(
            pc, ic, 2, np.zeros(199, np.int64), 2, 0, 2000, 10, False, 10**9),
        "micro_run_batch N=1000 (300,1) x20000": lambda: mod.micro_run_batch(1000, 300, 1, 3, 0, 10**9, *xs),
        "drive_complete N=1000 x2000": lambda: mod.drive_complete(1000, 0, 4, 0, 2000, 10, 10**9),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    args = ap.parse_args()
    rows = []
    py = workloads(_backend.get("python"))
    try:
        cy = workloads(_backend.get("cython"))
    except ImportError:
        cy = None
    for name, fn in py.items():
        tp = best_of(fn, args.repeat)
        tc = best_of(cy[name], args.repeat) if cy else float("nan")
        rows.append({"workload": name, "python_s": tp, "cython_s": tc, "speedup": tp / tc})
        print(f"{name:40s} python {tp:8.4f}s  cython {tc:8.5f}s  x{tp / tc:7.1f}")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
