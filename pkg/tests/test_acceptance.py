"""Acceptance criteria 1-8.

Each test records a PASS/FAIL line, printed in the terminal summary.
"""

import functools
import time

import pytest

from goim import harness as H
from goim import machine as M
from goim.graph import box_subgraphs, canonical, copy_box, validate
from goim.submachine import FuelExhausted as SubFuel
from goim.submachine import evaluate
from goim.syntax import Strategy, gen_closed_term, parse
from goim.translate import translate_closed

from conftest import record_criterion
from test_graph import family, shared_box_graph

COUNT = 500
MAX_SIZE = 40
FUEL = 100_000
SEED = 1
TIME_LIMIT = 60.0
# Every terminating campaign run is far shorter than this; divergent runs are
# checked over their first DEBUG_CAP transitions.
DEBUG_CAP = 300
STRATEGIES = list(Strategy)

pytestmark = pytest.mark.slow


def criterion(number, text):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                record_criterion(number, False, text)
                raise
            record_criterion(number, True, text)
        return run
    return wrap


@pytest.fixture(scope="module")
def campaigns():
    """Lockstep runs of the generated terms, per strategy, with wall times."""
    out = {}
    for s in STRATEGIES:
        t0 = time.perf_counter()
        runs = []
        for k in range(COUNT):
            t = gen_closed_term(H.term_seed(SEED, k), MAX_SIZE, s)
            runs.append((k, t, H.lockstep(t, FUEL)))
        out[s] = (runs, time.perf_counter() - t0)
    return out


def _summary(runs):
    done = sum(1 for _, _, r in runs if r.terminated)
    return f"{len(runs)} terms, {done} terminated"


@criterion(1, f"beta counts equal on {COUNT} terms per strategy (size <= {MAX_SIZE}, fuel 1e5), "
              f"each campaign under {TIME_LIMIT:.0f}s")
def test_criterion_1_beta_counts(campaigns):
    for s in STRATEGIES:
        runs, elapsed = campaigns[s]
        assert len(runs) >= COUNT
        assert elapsed < TIME_LIMIT, f"{s.value}: campaign took {elapsed:.1f}s"
        for k, t, r in runs:
            if r.terminated:
                assert r.sub.counts["beta"] == r.graph.counters["beta"], f"{s.value} #{k}"
            else:
                assert not r.sub.terminated and not r.graph.terminated, f"{s.value} #{k}"
        rules = set().union(*(r.rules for _, _, r in runs))
        assert H.RULES_FOR[s] <= rules, f"{s.value}: rules never used {H.RULES_FOR[s] - rules}"
        print(f"{s.value}: {_summary(runs)}, {elapsed:.1f}s")


@criterion(2, "sigma counts equal on the same campaign")
def test_criterion_2_sigma_counts(campaigns):
    for s in STRATEGIES:
        runs, _ = campaigns[s]
        for k, t, r in runs:
            if r.terminated:
                assert r.sub.counts["sigma"] == r.graph.counters["sigma"], f"{s.value} #{k}"


@criterion(3, "lockstep: every reduction matched by its transition segment, "
              "one final transition after the answer")
def test_criterion_3_lockstep(campaigns):
    for s in STRATEGIES:
        runs, _ = campaigns[s]
        bad = [(k, r.message) for k, _, r in runs if not r.ok]
        assert not bad, f"{s.value}: {bad[:3]}"


@criterion(4, "every box stays isomorphic to a box of the initial graph (100 runs, debug mode)")
def test_criterion_4_subgraph_property():
    runs = 0
    for k in range(100):
        s = STRATEGIES[k % 3]
        t = gen_closed_term(H.term_seed(SEED, k), MAX_SIZE, s)
        g = translate_closed(t)
        initial = {canonical(b) for b in box_subgraphs(g)}
        out = M.run(g, DEBUG_CAP, debug=True, check_boxes=True)
        assert not isinstance(out.result, M.Stuck), out.result.reason
        for b in box_subgraphs(g):
            assert canonical(b) in initial
        runs += 1
    assert runs == 100


@criterion(5, "total transitions <= c * |t| * beta on identity-chain, church-add, church-mul "
              "(parameters 1-8), c frozen from the three smallest instances")
def test_criterion_5_linear_overhead():
    rows = {(f, s): [H.bench_row(f, p, s) for p in range(1, 9)]
            for f in ("identity-chain", "church-add", "church-mul") for s in STRATEGIES}
    for key, rs in rows.items():
        assert all(not r.diverged and r.machine_beta == r.beta for r in rs), key
    c = max(H.frozen_bound(rs, 3) for rs in rows.values())
    for (f, s), rs in rows.items():
        for r in rs:
            assert r.total <= c * r.size * r.beta, \
                f"{f}({r.param}) {s.value}: {r.total} > {c:.3f} * {r.size} * {r.beta}"
    print(f"c = {c:.3f}")


@criterion(6, "copying a box G(1,3) for a contraction family H(5,2) gives H'(8,2)")
def test_criterion_6_worked_copy():
    g, bang, contracts = shared_box_graph()
    assert family(g, contracts) == (5, 2)
    root = g.add_link()
    g.inputs.append(root)
    copy_box(g, bang, root)
    assert family(g, contracts) == (8, 2)
    assert validate(g) == []


@criterion(7, "after every transition: graph valid, no link-link edges, one token, "
              "flag discipline (campaign terms, debug mode)")
def test_criterion_7_invariants():
    for s in STRATEGIES:
        for k in range(COUNT):
            t = gen_closed_term(H.term_seed(SEED, k), MAX_SIZE, s)
            st = M.init_state(translate_closed(t))
            out = M.run_state(st, DEBUG_CAP, debug=True)
            assert not isinstance(out.result, M.Stuck), f"{s.value} #{k}: {out.result.reason}"
            if isinstance(out.result, M.FuelExhausted):
                # only divergent terms are cut short
                assert not evaluate(t, FUEL).terminated, f"{s.value} #{k}"


@criterion(8, "Omega exhausts fuel 1e4 in both engines")
def test_criterion_8_omega():
    for s in STRATEGIES:
        t = parse(r"(\x. x x) (\x. x x)", s)
        sub = evaluate(t, 10_000)
        assert isinstance(sub.result, SubFuel) and sub.steps == 10_000
        graph = M.run(translate_closed(t), 10_000)
        assert isinstance(graph.result, M.FuelExhausted) and graph.steps == 10_000
        rep = H.cross_check(t, 10_000)
        assert rep.verdict == H.BOTH_DIVERGED
