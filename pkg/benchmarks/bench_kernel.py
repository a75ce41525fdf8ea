#!/usr/bin/env python3
"""Time the compiled run loop against the pure-Python one.

Each workload is translated once per repetition and run to completion on
both backends; the script checks the two runs agree (counters and label
streams) before reporting the best time of each.

    python benchmarks/bench_kernel.py --repeat 5
"""

import argparse
import sys
import time

from goim import harness as H
from goim import machine as M
from goim.syntax import Strategy, gen_closed_term, parse
from goim.translate import translate_closed


def workloads(args):
    for family, p in (("church-mul", 8), ("church-exp", 8), ("sharing-chain", 8),
                      ("identity-chain", 8)):
        for s in Strategy:
            yield f"{family}({p}) {s.value}", [parse(H.FAMILIES[family](p), s)]
    for s in Strategy:
        terms = [gen_closed_term(k, args.max_size, s) for k in range(args.count)]
        yield f"random x{args.count} {s.value}", terms


def run_all(terms, backend, fuel):
    out = []
    t0 = time.perf_counter()
    for t in terms:
        st = M.init_state(translate_closed(t))
        if backend == "python":
            out.append(M.run_python(st, fuel, record=True))
        else:
            out.append(M.run_kernel(st, fuel, record=True))
    return time.perf_counter() - t0, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--count", type=int, default=200, help="random terms per strategy")
    p.add_argument("--max-size", type=int, default=40)
    p.add_argument("--fuel", type=int, default=20_000)
    args = p.parse_args(argv)

    if M._kernel is None:
        print("compiled kernel not available; build it with `pip install -e .`", file=sys.stderr)
        return 1

    print(f"{'workload':32s} {'transitions':>12s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    total_py = total_cy = 0.0
    for name, terms in workloads(args):
        best = {}
        for backend in ("python", "cython"):
            times = []
            for _ in range(args.repeat):
                dt, outs = run_all(terms, backend, args.fuel)
                times.append(dt)
            best[backend] = (min(times), outs)
        py, cy = best["python"], best["cython"]
        for a, b in zip(py[1], cy[1]):
            if a.counters != b.counters or a.labels != b.labels:
                print(f"{name}: backends disagree", file=sys.stderr)
                return 1
        steps = sum(o.steps for o in py[1])
        total_py += py[0]
        total_cy += cy[0]
        print(f"{name:32s} {steps:12d} {py[0]:10.4f} {cy[0]:10.4f} {py[0] / cy[0]:7.1f}x")
    print(f"{'total':32s} {'':12s} {total_py:10.4f} {total_cy:10.4f} {total_py / total_cy:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
