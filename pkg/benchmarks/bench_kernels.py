"""Time the per-slot kernels on both backends.

    python benchmarks/bench_kernels.py [--repeat 200] [--json out.json]

Inputs are drawn from the default topology so the numbers reflect the
simulator's working point. The compiled column is skipped when the
extension is not built.
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from aoipower import SystemConfig, _backend
from aoipower.channel import ChannelStream


def _cases(rng):
    cfg = SystemConfig()
    args = (cfg.V, cfg.W, cfg.N0, cfg.eta_bits)
    cases = []
    for K, N in [(10, 10), (10, 6), (5, 5)]:
        stream = ChannelStream(cfg.topology.first(K), cfg.fading, 1, N)
        g = stream.gains(17)
        w = -rng.uniform(1.0, 80.0, K)
        cases.append((f"solve_suboptimal K={K} N={N}", "solve_suboptimal", (g, w) + args + (False,)))
    stream = ChannelStream(cfg.topology.first(5), cfg.fading, 1, 5)
    g5 = stream.gains(3)
    w5 = -rng.uniform(1.0, 80.0, 5)
    cases.append(("solve_exhaustive K=5 N=5", "solve_exhaustive", (g5, w5) + args))
    g10 = ChannelStream(cfg.topology, cfg.fading, 1, 10).gains(5)
    cases.append(("greedy_assign K=10 N=10", "greedy_assign", (g10, np.ones(10, dtype=np.int8), False)))
    cases.append(("waterfill N=10", "waterfill", (g10[0], cfg.W, cfg.N0, cfg.eta_bits)))
    return cases


def _time(fn, args, repeat):
    fn(*args)  # warm caches
    number = max(1, repeat)
    best = min(timeit.repeat(lambda: fn(*args), number=number, repeat=3))
    return best / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50, help="calls per timing (python backend uses a tenth)")
    ap.add_argument("--json", help="write results to this file")
    args = ap.parse_args(argv)

    backends = {"python": _backend.get("python")}
    try:
        backends["cython"] = _backend.get("cython")
    except ImportError:
        print("compiled kernels not built; timing the python backend only")

    rows = []
    for label, name, fargs in _cases(np.random.default_rng(0)):
        row = {"kernel": label}
        for bname, mod in backends.items():
            reps = args.repeat if bname == "cython" else max(1, args.repeat // 10)
            row[bname] = _time(getattr(mod, name), fargs, reps)
        if "cython" in row:
            row["speedup"] = row["python"] / row["cython"]
        rows.append(row)

    print(f"{'kernel':32s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for r in rows:
        cy = f"{r['cython'] * 1e6:10.1f}us" if "cython" in r else f"{'-':>12s}"
        sp = f"{r['speedup']:7.1f}x" if "speedup" in r else f"{'-':>8s}"
        print(f"{r['kernel']:32s} {r['python'] * 1e6:10.1f}us {cy} {sp}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
