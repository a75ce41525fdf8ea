"""Command-line front end.

    goim eval --strategy need --engine both --fuel 100000 "(\\x. x) (\\y. y)"
    goim check --strategy lv --count 500 --max-size 40 --seed 1
    goim bench --family church-mul --min 1 --max 8 --strategy need --out mul.csv
    goim translate "\\x. x"

Exit codes: 0 success, 1 mismatch or stuck, 2 usage or I/O error,
3 fuel exhausted.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys

from . import harness as H
from . import machine as M
from .graph import dump
from .submachine import Answer, SubMachineError, init_focus
from .syntax import ParseError, Strategy, parse, pretty
from .translate import translate_term

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_FUEL = 3


class UsageError(Exception):
    pass


def read_term(arg, strategy):
    """Parse ``arg``, which is a term, a file holding one, or ``-`` for stdin."""
    if arg == "-":
        text = sys.stdin.read()
    elif os.path.isfile(arg):
        try:
            with open(arg, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {arg}: {exc}") from exc
    else:
        text = arg
    try:
        return parse(text.strip(), strategy)
    except ParseError as exc:
        raise UsageError(f"parse error: {exc}") from exc


def write_jsonl(path, records, summary):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
            fh.write(json.dumps({"summary": summary}) + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write trace {path}: {exc}") from exc


def _sub_summary(out):
    return {"beta": out.counts["beta"], "sigma": out.counts["sigma"], "eps": out.counts["eps"],
            "steps": out.steps, "result": "answer" if out.terminated else _kind(out.result)}


def _graph_summary(out):
    c = dict(out.counters)
    c["total"] = out.steps
    c["result"] = {"Final": "final", "FuelExhausted": "fuel-exhausted", "Stuck": "stuck"}[
        type(out.result).__name__]
    return c


def _kind(result):
    return "stuck" if hasattr(result, "reason") else "fuel-exhausted"


def cmd_eval(args):
    strategy = Strategy.parse(args.strategy)
    t = read_term(args.term, strategy)
    try:
        init_focus(t)
    except SubMachineError as exc:
        raise UsageError(str(exc)) from exc
    want_trace = args.trace is not None
    if want_trace:
        # fail before doing any work if the trace cannot be written
        write_jsonl(args.trace, [], {})
    rep = H.Report(term=pretty(t, strategy), strategy=strategy.value, engines=args.engine)
    print(f"term      {rep.term}")
    print(f"strategy  {strategy.value}")
    try:
        if args.engine in ("sub", "both"):
            rep.sub = H.run_sub(t, args.fuel, trace=want_trace and args.engine == "sub",
                                show_focus=args.show_focus, implicit=strategy)
            s = rep.sub
            status = "answer" if s.terminated else _kind(s.result)
            print(f"sub       {status}: beta={s.counts['beta']} sigma={s.counts['sigma']} "
                  f"eps={s.counts['eps']} steps={s.steps}")
            if s.terminated:
                print(f"answer    {pretty(s.result.term(), strategy)}")
            elif hasattr(s.result, "reason"):
                print(f"stuck     {s.result.reason}")
        if args.engine in ("graph", "both"):
            rep.graph = H.run_graph(t, H.machine_fuel(args.fuel), trace=want_trace)
            g = rep.graph
            c = g.counters
            status = _graph_summary(g)["result"]
            print(f"graph     {status}: beta={c['beta']} sigma={c['sigma']} "
                  f"eps_pass={c['eps_pass']} eps_rewrite={c['eps_rewrite']} total={g.steps}")
            if isinstance(g.result, M.Stuck):
                print(f"stuck     {g.result.reason}")
    except SubMachineError as exc:
        raise UsageError(str(exc)) from exc

    if want_trace:
        if rep.graph is not None:
            write_jsonl(args.trace, rep.graph.trace, _graph_summary(rep.graph))
        else:
            write_jsonl(args.trace, rep.sub.trace, _sub_summary(rep.sub))

    if args.engine == "both":
        rep.verdict, rep.detail = H.compare(rep.sub, rep.graph)
        print(f"verdict   {rep.verdict}" + (f" ({rep.detail})" if rep.detail else ""))
        return {H.COUNTS_MATCH: EXIT_OK, H.BOTH_DIVERGED: EXIT_FUEL}.get(rep.verdict, EXIT_MISMATCH)
    if args.engine == "sub":
        if isinstance(rep.sub.result, Answer):
            return EXIT_OK
        return EXIT_MISMATCH if hasattr(rep.sub.result, "reason") else EXIT_FUEL
    if rep.graph.terminated:
        return EXIT_OK
    return EXIT_MISMATCH if isinstance(rep.graph.result, M.Stuck) else EXIT_FUEL


def cmd_check(args):
    strategies = list(Strategy) if args.strategy == "all" else [Strategy.parse(args.strategy)]
    code = EXIT_OK
    for s in strategies:
        res = H.campaign(s, args.count, args.max_size, args.seed, fuel=args.fuel, jobs=args.jobs)
        missing = res.missing_rules()
        verdict = "pass" if res.ok and not missing else "FAIL"
        print(f"{s.value:5s} {verdict}: {res.count} terms, {res.terminated} terminated, "
              f"{res.diverged} out of fuel, beta={res.beta} sigma={res.sigma}")
        rules = " ".join(f"{r}:{res.rules[r]}" for r in sorted(res.rules))
        print(f"      rules {rules}")
        if missing:
            print(f"      rules never exercised: {missing}")
        for k, term, msg in res.failures[:10]:
            print(f"      #{k}: {msg}\n         {term}")
        if verdict != "pass":
            code = EXIT_MISMATCH
    return code


def cmd_bench(args):
    if args.family not in H.FAMILIES:
        raise UsageError(f"unknown family {args.family!r} (choose from {', '.join(H.FAMILIES)})")
    if args.min > args.max or args.min < 1:
        raise UsageError("need 1 <= --min <= --max")
    strategy = Strategy.parse(args.strategy)
    rows = [H.bench_row(args.family, p, strategy, fuel=args.fuel) for p in range(args.min, args.max + 1)]
    try:
        fh = open(args.out, "w", newline="", encoding="utf-8") if args.out != "-" else sys.stdout
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc}") from exc
    with fh if fh is not sys.stdout else contextlib.nullcontext(fh):
        w = csv.writer(fh)
        w.writerow(H.BENCH_HEADER)
        for r in rows:
            w.writerow(r.csv())
    code = EXIT_OK
    for r in rows:
        if r.diverged:
            print(f"{r.family} {r.param}: diverged", file=sys.stderr)
            code = EXIT_FUEL
        elif r.machine_beta != r.beta:
            print(f"{r.family} {r.param}: beta {r.beta} vs machine {r.machine_beta}", file=sys.stderr)
            code = EXIT_MISMATCH
    ratios = H.ratio_maxima(rows)
    print(f"fit       total ~ {H.fit_overhead(rows):.3f} * size * beta (least squares)", file=sys.stderr)
    print(f"bound     c = {H.frozen_bound(rows):.3f} from the first three rows", file=sys.stderr)
    print(f"ratios    max sigma/beta = {ratios['sigma/beta']:.3f}, "
          f"max eps_rewrite/beta = {ratios['eps_rewrite/beta']:.3f}", file=sys.stderr)
    return code


def cmd_translate(args):
    strategy = Strategy.parse(args.strategy)
    t = read_term(args.term, strategy)
    sys.stdout.write(dump(translate_term(t)))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="goim", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate a closed term with one or both engines")
    e.add_argument("--strategy", choices=[s.value for s in Strategy], default="need")
    e.add_argument("--engine", choices=["sub", "graph", "both"], default="both")
    e.add_argument("--fuel", type=int, default=100_000,
                   help="sub-machine reductions (the graph machine gets 4*N+1 transitions)")
    e.add_argument("--trace", metavar="FILE", help="write a JSONL trace")
    e.add_argument("--show-focus", action="store_true",
                   help="include the pretty-printed focus in sub-machine traces")
    e.add_argument("term", metavar="TERM_OR_FILE")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("check", help="lockstep-check generated terms")
    c.add_argument("--strategy", choices=[s.value for s in Strategy] + ["all"], default="all")
    c.add_argument("--count", type=int, default=500)
    c.add_argument("--max-size", type=int, default=40)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--fuel", type=int, default=100_000)
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="transition counts for a family of terms")
    b.add_argument("--family", required=True, help=", ".join(H.FAMILIES))
    b.add_argument("--min", type=int, default=1)
    b.add_argument("--max", type=int, default=8)
    b.add_argument("--strategy", choices=[s.value for s in Strategy], default="need")
    b.add_argument("--fuel", type=int, default=1_000_000)
    b.add_argument("--out", default="-", metavar="CSV")
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("translate", help="dump the graph of a term")
    t.add_argument("--strategy", choices=[s.value for s in Strategy], default="need")
    t.add_argument("term", metavar="TERM")
    t.set_defaults(func=cmd_translate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"goim: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
