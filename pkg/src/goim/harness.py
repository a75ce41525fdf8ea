"""Cross-checking the two engines, and the benchmark families.

``fuel`` always counts sub-machine reductions.  The graph machine gets
``4 * fuel + 1`` transitions, the most it may spend simulating that many
reductions (at most three silent transitions before each matched one, plus
the final transition).
"""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import machine as M
from .graph import canonical
from .submachine import (
    BETA, EPS, RULE_LABEL, SIGMA, Answer, ESubFrame, LookupFrame, LVAppL, LVAppR,
    NeedAppL, RVAppL, RVAppR, _Engine, _supply_for, init_focus, iter_eval,
)
from .syntax import Strategy, free_vars, gen_closed_term, parse, size
from .translate import translate_closed, translate_focus

COUNTS_MATCH = "counts-match"
MISMATCH = "mismatch"
BOTH_DIVERGED = "both-diverged"
ERROR = "error"

RULES_FOR = {
    Strategy.NEED: {1, 2, 9, 10},
    Strategy.LV: {3, 4, 5, 9, 10},
    Strategy.RV: {6, 7, 8, 9, 10},
}


def machine_fuel(fuel):
    return 4 * fuel + 1


# ---------------------------------------------------------------------------
# Single-term cross-check

@dataclass
class Report:
    term: str
    strategy: str
    engines: str
    sub: object = None          # submachine.EvalOutcome
    graph: object = None        # machine.ExecOutcome
    verdict: str = ""
    detail: str = ""
    wall: dict = field(default_factory=dict)


def run_sub(t, fuel, trace=False, show_focus=False, implicit=None):
    from .submachine import evaluate
    return evaluate(t, fuel, trace=trace, show_focus=show_focus, implicit=implicit)


def run_graph(t, fuel, trace=False, debug=False, check_boxes=False, record=False, backend=None):
    g = translate_closed(t)
    return M.run(g, fuel, trace=trace, debug=debug, check_boxes=check_boxes,
                 record=record, backend=backend)


def compare(sub, graph):
    """Verdict for a pair of outcomes, with a one-line explanation."""
    if isinstance(graph.result, M.Stuck):
        return ERROR, f"graph machine stuck: {graph.result.reason}"
    if not hasattr(sub.result, "answer") and not hasattr(sub.result, "focus"):
        return ERROR, "sub-machine produced no outcome"
    sub_done = isinstance(sub.result, Answer)
    if hasattr(sub.result, "reason"):
        return ERROR, f"sub-machine stuck: {sub.result.reason}"
    if sub_done != graph.terminated:
        which = "sub-machine" if sub_done else "graph machine"
        return MISMATCH, f"only the {which} terminated"
    if not sub_done:
        return BOTH_DIVERGED, "both ran out of fuel"
    c = graph.counters
    if sub.counts[BETA] != c["beta"] or sub.counts[SIGMA] != c["sigma"]:
        return MISMATCH, (f"beta {sub.counts[BETA]} vs {c['beta']}, "
                          f"sigma {sub.counts[SIGMA]} vs {c['sigma']}")
    return COUNTS_MATCH, ""


def cross_check(t, fuel, strategy=None, engines="both", trace=False, backend=None):
    text = t if isinstance(t, str) else None
    rep = Report(term=text or "", strategy=strategy.value if strategy else "", engines=engines)
    if engines in ("sub", "both"):
        t0 = time.perf_counter()
        rep.sub = run_sub(t, fuel, trace=trace)
        rep.wall["sub"] = time.perf_counter() - t0
    if engines in ("graph", "both"):
        t0 = time.perf_counter()
        rep.graph = run_graph(t, machine_fuel(fuel), trace=trace, backend=backend)
        rep.wall["graph"] = time.perf_counter() - t0
    if engines == "both":
        rep.verdict, rep.detail = compare(rep.sub, rep.graph)
    return rep


# ---------------------------------------------------------------------------
# Lockstep check

@dataclass
class Lockstep:
    ok: bool
    message: str = ""
    rules: Counter = field(default_factory=Counter)
    reductions: int = 0
    transitions: int = 0
    terminated: bool = False
    sub: object = None
    graph: object = None

    def traces(self):
        """Both label streams, for failure reports."""
        sub = "".join(_SHORT[RULE_LABEL[r]] for r in self.sub_rules) if self.sub_rules else ""
        mac = "".join(_SHORT[M.LABEL_OF[c]] for c in (self.graph.labels or b""))
        return sub, mac

    sub_rules: list = field(default_factory=list)


_SHORT = {EPS: "e", BETA: "b", SIGMA: "s"}


def lockstep(t, fuel, backend=None, table=None):
    """Match every reduction of the sub-machine with a segment of transitions.

    A reduction by rule ``r`` is matched by the next ``RULE_TRANSITIONS[r]``
    transitions: all silent except the last, which carries the rule's label.
    This enforces the weak-simulation bounds (at most three silent
    transitions before a matched beta/sigma, at most four transitions for a
    silent reduction) and that beta/sigma label sequences coincide.  An
    answer must then be followed by exactly one transition into the final
    state.  ``table`` replaces the pass table (fault injection).
    """
    gen = iter_eval(t, fuel)
    rules = []
    while True:
        try:
            rule, _ = next(gen)
        except StopIteration as stop:
            sub = stop.value
            break
        rules.append(rule)
    g = translate_closed(t)
    st = M.init_state(g)
    mf = machine_fuel(fuel)
    if table is not None:
        graph = M.run_python(st, mf, record=True, table=table)
    else:
        graph = M.run_state(st, mf, record=True, backend=backend)
    labels = graph.labels
    res = Lockstep(True, rules=Counter(rules), reductions=len(rules),
                   transitions=graph.steps, sub=sub, graph=graph, sub_rules=rules)

    def fail(msg):
        res.ok = False
        res.message = msg
        return res

    if isinstance(graph.result, M.Stuck):
        return fail(f"graph machine stuck: {graph.result.reason}")
    if hasattr(sub.result, "reason"):
        return fail(f"sub-machine stuck: {sub.result.reason}")
    pos = 0
    for k, rule in enumerate(rules):
        n = M.RULE_TRANSITIONS[rule]
        seg = labels[pos:pos + n]
        want = RULE_LABEL[rule]
        if len(seg) < n:
            if graph.terminated:
                return fail(f"reduction {k} (rule {rule}): graph machine already final")
            if isinstance(graph.result, M.FuelExhausted):
                # the machine ran out first: nothing more to compare
                res.terminated = False
                return res
            return fail(f"reduction {k} (rule {rule}): transitions missing")
        got = [M.LABEL_OF[c] for c in seg]
        if any(x != EPS for x in got[:-1]):
            return fail(f"reduction {k} (rule {rule}): labelled transition in the silent prefix {got}")
        if got[-1] != want:
            return fail(f"reduction {k} (rule {rule}): expected {want}, machine gave {got[-1]}")
        if want != EPS and n - 1 > 3:
            return fail(f"reduction {k} (rule {rule}): {n - 1} silent transitions before {want}")
        if want == EPS and n > 4:
            return fail(f"reduction {k} (rule {rule}): {n} transitions for a silent reduction")
        pos += n
    if isinstance(sub.result, Answer):
        rest = labels[pos:]
        if len(rest) != M.FINAL_TRANSITIONS or M.LABEL_OF[rest[0]] != EPS or not graph.terminated:
            return fail(f"answer reached but machine made {len(rest)} more transitions "
                        f"(final: {graph.terminated})")
        res.terminated = True
    else:
        if graph.terminated and graph.steps <= pos:
            return fail("graph machine terminated while the sub-machine diverged")
    sub_bs = [RULE_LABEL[r] for r in rules if RULE_LABEL[r] != EPS]
    mac_bs = [M.LABEL_OF[c] for c in labels[:pos] if M.LABEL_OF[c] != EPS]
    if sub_bs != mac_bs:
        return fail("beta/sigma label sequences differ")
    return res


# ---------------------------------------------------------------------------
# Strong simulation (state by state)

def expected_stacks(frames):
    """Token stacks the machine holds when the window is inside ``frames``.

    Links are shown as ``"link"`` since their ids depend on the run.
    """
    S, B = [], [M.B_STAR]
    _stack_frames(frames, S, B)
    return S, B


def _stack_frames(frames, S, B):
    for f in frames:
        if isinstance(f, NeedAppL):
            S.append(M.S_AT)
            B.extend([M.B_BANG, M.B_DIAMOND])
        elif isinstance(f, LVAppL):
            S.append(M.S_STAR)
            B.append(M.B_DIAMOND)
        elif isinstance(f, LVAppR):
            S.append(M.S_LAM)
            B.append(M.B_STAR)
        elif isinstance(f, RVAppR):
            B.append(M.B_STAR)
        elif isinstance(f, RVAppL):
            S.append(M.S_AT)
            B.extend([M.B_BANG, M.B_DIAMOND])
        elif isinstance(f, LookupFrame):
            _stack_frames(f.inner, S, B)
            B.append("link")
        elif not isinstance(f, ESubFrame):
            raise TypeError(f"not a context frame: {f!r}")


def strong_simulation(t, fuel, check_every=1):
    """Check after each reduction that the machine state *is* the translation.

    Returns ``(ok, message, reductions)``.
    """
    focus = init_focus(t)
    eng = _Engine(focus.frames, focus.window, _supply_for(focus))
    st = M.init_state(translate_closed(t))
    for k in range(fuel):
        rule = eng.advance()
        if rule < 0:
            return False, f"sub-machine stuck: {eng.reason}", k
        if rule == 0:
            try:
                M.step(st)
            except M.StuckError as exc:
                return False, f"final transition stuck: {exc.reason}", k
            if not M.is_final(st):
                return False, "answer not followed by the final state", k
            return True, "", k
        for _ in range(M.RULE_TRANSITIONS[rule]):
            try:
                M.step(st)
            except M.StuckError as exc:
                return False, f"after rule {rule}: stuck: {exc.reason}", k
        if k % check_every:
            continue
        if st.dir != M.UP or st.flag != M.FLAG_NONE:
            return False, f"after rule {rule}: token not at rest ({st.describe()})", k
        S, B = expected_stacks(eng.frames)
        got_b = ["link" if x >= 0 else x for x in st.B]
        if st.S != S or got_b != B:
            return False, f"after rule {rule}: stacks {st.describe()}, expected S={S} B={B}", k
        want, hole = translate_focus(eng.frames, eng.window)
        if canonical(st.graph, {st.pos}) != canonical(want, {hole}):
            return False, f"after rule {rule}: graph differs from the translation", k
    return True, "fuel exhausted", fuel


# ---------------------------------------------------------------------------
# Campaign

def term_seed(seed, k):
    return seed * 1_000_003 + k


@dataclass
class CampaignResult:
    strategy: str
    count: int = 0
    terminated: int = 0
    diverged: int = 0
    failures: list = field(default_factory=list)
    rules: Counter = field(default_factory=Counter)
    beta: int = 0
    sigma: int = 0

    @property
    def ok(self):
        return not self.failures

    def missing_rules(self):
        return sorted(RULES_FOR[Strategy(self.strategy)] - set(self.rules))

    def merge(self, other):
        self.count += other.count
        self.terminated += other.terminated
        self.diverged += other.diverged
        self.failures.extend(other.failures)
        self.rules.update(other.rules)
        self.beta += other.beta
        self.sigma += other.sigma
        return self


def _campaign_shard(args):
    strategy, indices, max_size, seed, fuel, backend = args
    out = CampaignResult(strategy.value)
    for k in indices:
        t = gen_closed_term(term_seed(seed, k), max_size, strategy)
        res = lockstep(t, fuel, backend=backend)
        out.count += 1
        out.rules.update(res.rules)
        if not res.ok:
            from .syntax import pretty
            out.failures.append((k, pretty(t), res.message))
            continue
        if res.terminated:
            out.terminated += 1
            out.beta += res.sub.counts[BETA]
            out.sigma += res.sub.counts[SIGMA]
        else:
            out.diverged += 1
    return out


def campaign(strategy, count, max_size, seed, fuel=100_000, jobs=1, backend=None):
    """Lockstep-check ``count`` generated terms; shards run in worker processes."""
    jobs = max(1, jobs)
    shards = [list(range(i, count, jobs)) for i in range(jobs)]
    args = [(strategy, idx, max_size, seed, fuel, backend) for idx in shards]
    total = CampaignResult(strategy.value)
    if jobs == 1:
        parts = [_campaign_shard(args[0])]
    else:
        with ProcessPoolExecutor(jobs) as pool:
            parts = list(pool.map(_campaign_shard, args))
    for part in parts:
        total.merge(part)
    total.failures.sort()
    return total


# ---------------------------------------------------------------------------
# Benchmark families

def church(n):
    return "(\\f. \\x. " + "f (" * n + "x" + ")" * n + ")"


IDENT = "(\\z. z)"


def identity_chain(n):
    """``I (I (... (I I)))`` with ``n`` applications: exactly ``n`` betas."""
    body = IDENT
    for k in range(n):
        body = f"(\\x{k}. x{k}) ({body})"
    return body


def church_add(p):
    add = "(\\m. \\n. \\f. \\x. m f (n f x))"
    return f"{add} {church(p)} {church(p)} {IDENT} {IDENT}"


def church_mul(p):
    mul = "(\\m. \\n. \\f. m (n f))"
    return f"{mul} {church(p)} {church(p)} {IDENT} {IDENT}"


def church_exp(p):
    """``p ^ 2`` via ``c2 cp``."""
    return f"{church(2)} {church(p)} {IDENT} {IDENT}"


def sharing_chain(p):
    """``let x1 = I in let x2 = x1 x1 in ... in xp``, every variable used twice."""
    body = f"x{p}"
    for k in range(p, 1, -1):
        body = f"(\\x{k}. {body}) (x{k - 1} x{k - 1})"
    return f"(\\x1. {body}) {IDENT}"


FAMILIES = {
    "identity-chain": identity_chain,
    "church-add": church_add,
    "church-mul": church_mul,
    "church-exp": church_exp,
    "sharing-chain": sharing_chain,
}

BENCH_HEADER = ["family", "param", "size", "beta", "sigma", "eps_pass", "eps_rewrite", "total"]


@dataclass
class BenchRow:
    family: str
    param: int
    size: int
    beta: int
    sigma: int
    eps_pass: int
    eps_rewrite: int
    total: int
    diverged: bool = False
    machine_beta: int = 0

    def csv(self):
        return [self.family, self.param, self.size, self.beta, self.sigma,
                self.eps_pass, self.eps_rewrite, self.total]


def bench_row(family, param, strategy, fuel=1_000_000, backend=None):
    t = parse(FAMILIES[family](param), strategy)
    sub = run_sub(t, fuel)
    graph = run_graph(t, machine_fuel(fuel), backend=backend)
    c = graph.counters
    return BenchRow(family, param, size(t), sub.counts[BETA], c["sigma"], c["eps_pass"],
                    c["eps_rewrite"], graph.steps,
                    diverged=not (sub.terminated and graph.terminated),
                    machine_beta=c["beta"])


def fit_overhead(rows):
    """Least-squares ``c`` in ``total ~ c * size * beta`` (through the origin)."""
    xs = [r.size * r.beta for r in rows if r.beta and not r.diverged]
    ys = [r.total for r in rows if r.beta and not r.diverged]
    den = sum(x * x for x in xs)
    return sum(x * y for x, y in zip(xs, ys)) / den if den else 0.0


def frozen_bound(rows, k=3):
    """The smallest ``c`` with ``total <= c * size * beta`` on the first ``k`` rows."""
    first = [r for r in rows if r.beta and not r.diverged][:k]
    return max(r.total / (r.size * r.beta) for r in first) if first else 0.0


def ratio_maxima(rows):
    good = [r for r in rows if r.beta and not r.diverged]
    if not good:
        return {"sigma/beta": 0.0, "eps_rewrite/beta": 0.0}
    return {
        "sigma/beta": max(r.sigma / r.beta for r in good),
        "eps_rewrite/beta": max(r.eps_rewrite / r.beta for r in good),
    }
