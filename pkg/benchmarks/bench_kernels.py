"""Time the compiled and numpy tableau kernels on the same workloads.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--csv out.csv]

Workloads: random LPs through the two-phase simplex, random LCPs through
Lemke's method, and full Cut-and-Play runs on seeded knapsack games. Both
backends must give identical answers; the script exits non-zero otherwise.
"""
import argparse
import csv
import sys
import time

import numpy as np

from cutplay.cnp import CnpConfig, cut_and_play
from cutplay.instances import game_from_doc, generate_knapsack
from cutplay.solvers import kernels
from cutplay.solvers.lcp import LcpProblem, solve_lcp_lemke
from cutplay.solvers.lp import LE, LinearProgram, solve_lp


def lp_workload(count=60, n=40, m=30, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        A = rng.uniform(0, 10, (m, n))
        b = rng.uniform(10, 100, m)
        out.append(LinearProgram(rng.uniform(1, 10, n), A, b, [LE] * m, 0.0, np.inf, "max"))
    return out


def lcp_workload(count=40, n=40, seed=1):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        B = rng.normal(size=(n, n))
        out.append(LcpProblem(B @ B.T + np.eye(n), rng.normal(size=n)))
    return out


def game_workload(seeds=range(4), n=2, m=8):
    return [game_from_doc(generate_knapsack(n, m, s)) for s in seeds]


def run_lp(items):
    return [round(solve_lp(lp).value, 9) for lp in items]


def run_lcp(items):
    return [tuple(np.round(solve_lcp_lemke(p).z, 9)) for p in items]


def run_cnp(items):
    cfg = CnpConfig()
    out = []
    for g in items:
        r = cut_and_play(g, cfg)
        out.append((r.outcome, r.stats["iterations"]))
    return out


def time_backend(backend, fn, items, repeat):
    old = kernels.use(backend)
    try:
        best, answer = np.inf, None
        for _ in range(repeat):
            t = time.perf_counter()
            answer = fn(items)
            best = min(best, time.perf_counter() - t)
    finally:
        kernels.use(old)
    return best, answer


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--csv", help="also write the table as CSV")
    args = ap.parse_args(argv)
    try:
        kernels.use("cython")
    except ImportError:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    workloads = [("lp-simplex", run_lp, lp_workload()), ("lcp-lemke", run_lcp, lcp_workload()),
                 ("cut-and-play", run_cnp, game_workload())]
    rows, mismatch = [], False
    for name, fn, items in workloads:
        tc, ac = time_backend("cython", fn, items, args.repeat)
        tp, ap_ = time_backend("python", fn, items, args.repeat)
        same = ac == ap_
        mismatch |= not same
        rows.append({"workload": name, "items": len(items), "cython_s": f"{tc:.4f}", "python_s": f"{tp:.4f}",
                     "speedup": f"{tp / tc:.2f}", "identical": same})
    width = max(len(r["workload"]) for r in rows)
    print(f"{'workload':<{width}}  items  cython_s  python_s  speedup  identical")
    for r in rows:
        print(f"{r['workload']:<{width}}  {r['items']:>5}  {r['cython_s']:>8}  {r['python_s']:>8}  "
              f"{r['speedup']:>7}  {r['identical']}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 2 if mismatch else 0


if __name__ == "__main__":
    sys.exit(main())
