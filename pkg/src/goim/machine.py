"""The token-guided graph-rewriting machine.

A state is a graph with one input (the root) and no outputs, plus a token:
a position (a link), a direction, a rewrite flag, a computation stack and a
box stack.  Pass transitions move the token over one node and touch only the
stacks; rewrite transitions fire when the flag is raised and change the
graph around the token.

Stacks are Python lists with the top at the end; the bottom marker is
implicit (an empty list).  Box-stack entries are either one of the negative
symbols below or a link id.

The run loop has two backends with identical behaviour: the compiled kernel
in ``_kernel`` (used when it is importable and ``GOIM_PURE`` is not set) and
:func:`run_python` below.  Traces and debug checks always use the Python
loop.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field

from . import graph as G
from .graph import NONE, box_subgraphs, canonical, copy_box, link_link_edges, validate

UP = 0
DOWN = 1
DIR_NAMES = ("up", "down")

FLAG_NONE = 0
FLAG_LAMBDA = 1
FLAG_BANG = 2
FLAG_NAMES = ("none", "lambda", "bang")

# computation stack symbols
S_STAR = 0
S_LAM = 1
S_AT = 2
S_NAMES = ("*", "lam", "@")

# box stack symbols; anything >= 0 is a link
B_STAR = -1
B_BANG = -2
B_DIAMOND = -3
B_NAMES = {B_STAR: "*", B_BANG: "!", B_DIAMOND: "<>"}

# labels as recorded by both backends
L_PASS = 0
L_OPEN = 1
L_BETA = 2
L_SIGMA = 3
LABEL_OF = {L_PASS: "eps", L_OPEN: "eps", L_BETA: "beta", L_SIGMA: "sigma"}

# ---------------------------------------------------------------------------
# Pass transitions
#
# Cells are keyed by (node kind, direction, arrival port, class of the
# computation-stack top, class of the box-stack top).  "*" matches anything.
# Arrival ports are the port of the node the token enters through.

ANY = "*"
EMPTY = "empty"
LINK = "link"

A_NEED_UP = "need-up"          # to composition; push @ and !
A_LV_UP = "lv-up"              # to composition; push *
A_LV_ARG = "lv-arg"            # function returned: to argument; push * on box stack
A_LV_FUN = "lv-fun"            # argument returned: to composition; lam -> @
A_RV_UP = "rv-up"              # to argument; push * on box stack
A_RV_FUN = "rv-fun"            # argument returned: to composition; push @
A_DEREF = "deref"              # up; push <>
A_CONTRACT = "contract"        # up; push the arrival link
A_BOUNCE = "bounce"            # a value is reached: turn back; * -> !
A_RAISE_BANG = "raise-bang"    # box must be opened or copied
A_VALUE = "value"              # function value reached: turn back; * -> lam
A_RAISE_LAMBDA = "raise-lam"   # redex found: pop @

_CELLS = [
    (G.APP_NEED, UP, "in0", ANY, ANY, A_NEED_UP),
    (G.APP_LV, UP, "in0", ANY, ANY, A_LV_UP),
    (G.APP_LV, DOWN, "out0", S_LAM, ANY, A_LV_ARG),
    (G.APP_LV, DOWN, "out1", S_LAM, B_BANG, A_LV_FUN),
    (G.APP_RV, UP, "in0", ANY, ANY, A_RV_UP),
    (G.APP_RV, DOWN, "out1", ANY, B_BANG, A_RV_FUN),
    (G.DEREF, UP, "in0", ANY, ANY, A_DEREF),
    (G.CONTRACT, UP, "in", ANY, ANY, A_CONTRACT),
    (G.BANG, UP, "in0", ANY, B_STAR, A_BOUNCE),
    # Copying and discarding share one transition: a box whose C node runs
    # out of inputs stays behind under a C0 node as unreachable garbage.
    (G.BANG, UP, "in0", ANY, B_DIAMOND, A_RAISE_BANG),
    (G.BANG, UP, "in0", ANY, LINK, A_RAISE_BANG),
    (G.LAM, UP, "in0", S_STAR, ANY, A_VALUE),
    (G.LAM, UP, "in0", S_AT, ANY, A_RAISE_LAMBDA),
]

S_CLASSES = (EMPTY, S_STAR, S_LAM, S_AT)
B_CLASSES = (EMPTY, B_STAR, B_BANG, B_DIAMOND, LINK)
ARRIVALS = {
    G.LAM: {UP: ("in0", "in1"), DOWN: ("out0",)},
    G.APP_NEED: {UP: ("in0",), DOWN: ("out0", "out1")},
    G.APP_LV: {UP: ("in0",), DOWN: ("out0", "out1")},
    G.APP_RV: {UP: ("in0",), DOWN: ("out0", "out1")},
    G.BANG: {UP: ("in0",), DOWN: ("out0",)},
    G.QUEST: {UP: ("in0",), DOWN: ("out0",)},
    G.DEREF: {UP: ("in0",), DOWN: ("out0",)},
    G.CONTRACT: {UP: ("in",), DOWN: ("out0",)},
}


class TableConflict(Exception):
    pass


def build_table(cells=_CELLS):
    """Expand wildcard cells into a total map over concrete keys.

    Raises :class:`TableConflict` if two cells claim the same key.
    """
    table = {}
    for kind, d, port, s, b, action in cells:
        for sc in (S_CLASSES if s == ANY else (s,)):
            for bc in (B_CLASSES if b == ANY else (b,)):
                key = (kind, d, port, sc, bc)
                if key in table and table[key] != action:
                    raise TableConflict(f"cell {key} claimed by {table[key]} and {action}")
                table[key] = action
    return table


PASS_TABLE = build_table()


def all_cells():
    for kind, by_dir in ARRIVALS.items():
        for d, ports in by_dir.items():
            for port, sc, bc in itertools.product(ports, S_CLASSES, B_CLASSES):
                yield (kind, d, port, sc, bc)


def unhandled_cells(table=PASS_TABLE):
    """Keys with no pass transition; reaching one means the machine is stuck."""
    return [key for key in all_cells() if key not in table]


def describe_cell(key):
    kind, d, port, sc, bc = key
    s = sc if isinstance(sc, str) else S_NAMES[sc]
    b = bc if isinstance(bc, str) else B_NAMES[bc]
    return f"{G.KIND_NAMES[kind]} {DIR_NAMES[d]} via {port}, stack top {s}, box top {b}"


def _s_class(S):
    return S[-1] if S else EMPTY


def _b_class(B):
    if not B:
        return EMPTY
    top = B[-1]
    return LINK if top >= 0 else top


# Transitions each sub-machine rule takes on the graph; the final answer
# costs one more.
RULE_TRANSITIONS = {1: 2, 2: 4, 3: 2, 4: 4, 5: 4, 6: 1, 7: 3, 8: 4, 9: 1, 10: 2}
FINAL_TRANSITIONS = 1


# ---------------------------------------------------------------------------
# States and outcomes

@dataclass
class State:
    graph: G.Graph
    pos: int
    dir: int = UP
    flag: int = FLAG_NONE
    S: list = field(default_factory=list)
    B: list = field(default_factory=lambda: [B_STAR])

    @property
    def root(self):
        return self.graph.inputs[0]

    def describe(self):
        s = " ".join(S_NAMES[x] for x in self.S) or "-"
        b = " ".join(B_NAMES.get(x, f"e{x}") for x in self.B) or "-"
        return (f"pos={self.pos} dir={DIR_NAMES[self.dir]} flag={FLAG_NAMES[self.flag]} "
                f"S=[{s}] B=[{b}]")


class MachineError(ValueError):
    pass


def init_state(g):
    if len(g.inputs) != 1 or g.outputs:
        raise MachineError(
            f"machine graphs need interface (1,0), got ({len(g.inputs)},{len(g.outputs)})")
    return State(g, g.inputs[0])


def is_final(st):
    return (st.pos == st.graph.inputs[0] and st.dir == DOWN and st.flag == FLAG_NONE
            and not st.S and st.B == [B_BANG])


@dataclass(frozen=True)
class Final:
    graph: G.Graph


@dataclass(frozen=True)
class FuelExhausted:
    state: State


@dataclass(frozen=True)
class Stuck:
    state: State
    reason: str


def new_counters():
    return {"beta": 0, "sigma": 0, "eps_pass": 0, "eps_rewrite": 0}


@dataclass
class ExecOutcome:
    result: object
    counters: dict
    steps: int
    trace: list | None = None
    labels: bytes | None = None
    backend: str = "python"

    @property
    def terminated(self):
        return isinstance(self.result, Final)

    @property
    def total(self):
        return self.steps


class StuckError(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


# ---------------------------------------------------------------------------
# Transitions

def _retarget(g, link, node, port):
    g.ldst[link] = node
    if port == "in0":
        g.in0[node] = link
    elif port == "in1":
        g.in1[node] = link


def pass_step(st, table=PASS_TABLE):
    """Move the token over one node (or one link-link edge)."""
    g = st.graph
    p = st.pos
    if st.dir == UP:
        n = g.ldst[p]
        if n == NONE:
            if g.lup[p] != NONE:
                st.pos = g.lup[p]
                return
            raise StuckError(f"token at output link {p} going up")
        port = "in" if g.kind[n] == G.CONTRACT else ("in0" if g.in0[n] == p else "in1")
    else:
        n = g.lsrc[p]
        if n == NONE:
            if g.ldown[p] != NONE:
                st.pos = g.ldown[p]
                return
            raise StuckError(f"token at input link {p} going down")
        port = "out0" if g.out0[n] == p else "out1"
    key = (g.kind[n], st.dir, port, _s_class(st.S), _b_class(st.B))
    action = table.get(key)
    if action is None:
        raise StuckError("no pass transition for " + describe_cell(key))
    S, B = st.S, st.B
    if action is A_NEED_UP:
        st.pos = g.out0[n]
        S.append(S_AT)
        B.append(B_BANG)
    elif action is A_LV_UP:
        st.pos = g.out0[n]
        S.append(S_STAR)
    elif action is A_LV_ARG:
        st.pos = g.out1[n]
        st.dir = UP
        B.append(B_STAR)
    elif action is A_LV_FUN:
        st.pos = g.out0[n]
        st.dir = UP
        S[-1] = S_AT
    elif action is A_RV_UP:
        st.pos = g.out1[n]
        B.append(B_STAR)
    elif action is A_RV_FUN:
        st.pos = g.out0[n]
        st.dir = UP
        S.append(S_AT)
    elif action is A_DEREF:
        st.pos = g.out0[n]
        B.append(B_DIAMOND)
    elif action is A_CONTRACT:
        st.pos = g.out0[n]
        B.append(p)
    elif action is A_BOUNCE:
        st.dir = DOWN
        B[-1] = B_BANG
    elif action is A_RAISE_BANG:
        st.flag = FLAG_BANG
    elif action is A_VALUE:
        st.dir = DOWN
        S[-1] = S_LAM
    elif action is A_RAISE_LAMBDA:
        S.pop()
        st.flag = FLAG_LAMBDA
    else:  # pragma: no cover - table and dispatch out of sync
        raise StuckError(f"unknown action {action}")


def rewrite_beta(st):
    """Remove a lam/@ pair: the body replaces the application, the argument
    is wired to the variable's C node."""
    g = st.graph
    p = st.pos
    lam, app = g.ldst[p], g.lsrc[p]
    if lam == NONE or g.kind[lam] != G.LAM or app == NONE or g.kind[app] not in G.APP_KINDS \
            or g.out0[app] != p or g.in0[lam] != p:
        raise StuckError(f"beta: no lam/@ redex at link {p}")
    if not st.B or st.B[-1] != B_BANG:
        raise StuckError("beta: box stack top is not !")
    i, a = g.in0[app], g.out1[app]
    b, c = g.out0[lam], g.in1[lam]
    y, u = g.ldst[b], g.ldst[a]
    y_port, u_port = g.in_port(b), g.in_port(a)
    _retarget(g, i, y, y_port)
    _retarget(g, c, u, u_port)
    for l in (p, a, b):
        g.kill_link(l)
    g.kill_node(app)
    g.kill_node(lam)
    st.pos = i
    st.dir = UP
    st.B.pop()
    st.flag = FLAG_NONE


def rewrite_open(st):
    """Open the box above the token, removing its doors and the D below it."""
    g = st.graph
    p = st.pos
    bang, der = g.ldst[p], g.lsrc[p]
    if bang == NONE or g.kind[bang] != G.BANG or der == NONE or g.kind[der] != G.DEREF:
        raise StuckError(f"open: no D/! pair at link {p}")
    d, r = g.in0[der], g.out0[bang]
    content = g.ldst[r]
    _retarget(g, d, content, g.in_port(r))
    for q in g.box_doors(bang):
        inner, outer = g.in0[q], g.out0[q]
        src = g.lsrc[inner]
        if g.out0[src] == inner:
            g.out0[src] = outer
        else:
            g.out1[src] = outer
        g.lsrc[outer] = src
        g.kill_link(inner)
        g.kill_node(q)
    for l in (p, r):
        g.kill_link(l)
    g.kill_node(bang)
    g.kill_node(der)
    st.pos = d
    st.B.pop()
    st.flag = FLAG_NONE


def rewrite_copy(st):
    """Give the C input on top of the box stack its own copy of the box."""
    g = st.graph
    p = st.pos
    bang, c = g.ldst[p], g.lsrc[p]
    e = st.B[-1]
    if bang == NONE or g.kind[bang] != G.BANG or c == NONE or g.kind[c] != G.CONTRACT:
        raise StuckError(f"copy: no C/! pair at link {p}")
    if e < 0 or not g.lalive[e] or g.ldst[e] != c:
        raise StuckError(f"copy: box stack top {e} is not an input of C node {c}")
    g.arity[c] -= 1
    g.ldst[e] = NONE
    copy_box(g, bang, e)
    st.pos = e
    st.dir = UP
    st.B.pop()
    st.flag = FLAG_NONE


def step(st, table=PASS_TABLE):
    """One transition; returns its label code.  Raises :class:`StuckError`."""
    if st.flag == FLAG_NONE:
        pass_step(st, table)
        return L_PASS
    if st.flag == FLAG_LAMBDA:
        rewrite_beta(st)
        return L_BETA
    top = st.B[-1] if st.B else None
    if top == B_DIAMOND:
        rewrite_open(st)
        return L_OPEN
    if top is not None and top >= 0:
        rewrite_copy(st)
        return L_SIGMA
    raise StuckError("flag ! raised but box stack top is neither <> nor a link")


_COUNTER_KEY = {L_PASS: "eps_pass", L_OPEN: "eps_rewrite", L_BETA: "beta", L_SIGMA: "sigma"}


def trace_record(i, code, st):
    return {
        "i": i,
        "kind": "pass" if code == L_PASS else "rewrite",
        "label": LABEL_OF[code],
        "pos": st.pos,
        "dir": DIR_NAMES[st.dir],
        "flag": FLAG_NAMES[st.flag],
        "cs_depth": len(st.S),
        "bs_depth": len(st.B),
    }


# ---------------------------------------------------------------------------
# Debug checks

class InvariantError(AssertionError):
    pass


class Checker:
    """Per-transition invariant checks used in debug mode."""

    def __init__(self, st, boxes=False):
        self.boxes = boxes
        self.known = {canonical(b) for b in box_subgraphs(st.graph)} if boxes else set()
        self.checked = 0

    def __call__(self, st, code, flag_before):
        g = st.graph
        if flag_before != FLAG_NONE and code == L_PASS:
            raise InvariantError("pass transition while the flag was raised")
        if code != L_PASS and st.flag != FLAG_NONE:
            raise InvariantError("flag still raised after a rewrite")
        if not (0 <= st.pos < g.n_links) or not g.lalive[st.pos]:
            raise InvariantError(f"token sits on missing link {st.pos}")
        for e in st.B:
            if e >= 0 and not g.lalive[e]:
                raise InvariantError(f"box stack refers to missing link {e}")
        errs = validate(g)
        if errs:
            raise InvariantError("; ".join(errs[:5]))
        if link_link_edges(g):
            raise InvariantError("link-link edge in machine graph")
        if self.boxes and code != L_PASS:
            # pass transitions leave the graph as it was, so only rewrites
            # can break the sub-graph property
            for sub in box_subgraphs(g):
                if canonical(sub) not in self.known:
                    raise InvariantError("box not found in the initial graph")
        self.checked += 1


# ---------------------------------------------------------------------------
# Run loops

def run_python(st, fuel, trace=False, debug=False, check_boxes=False, record=False,
               table=PASS_TABLE):
    """Run from ``st`` (mutated in place) for at most ``fuel`` transitions."""
    counters = new_counters()
    records = [] if trace else None
    labels = bytearray() if record else None
    checker = Checker(st, check_boxes) if debug else None
    steps = 0
    result = None
    while True:
        if is_final(st):
            result = Final(st.graph)
            break
        if steps >= fuel:
            result = FuelExhausted(st)
            break
        flag_before = st.flag
        try:
            code = step(st, table)
        except StuckError as exc:
            result = Stuck(st, f"{exc.reason} [{st.describe()}]")
            break
        steps += 1
        counters[_COUNTER_KEY[code]] += 1
        if labels is not None:
            labels.append(code)
        if records is not None:
            records.append(trace_record(steps - 1, code, st))
        if checker is not None:
            checker(st, code, flag_before)
    return ExecOutcome(result, counters, steps, records,
                       bytes(labels) if labels is not None else None, "python")


try:
    if os.environ.get("GOIM_PURE"):
        raise ImportError("pure-Python backend requested")
    from . import _kernel
except ImportError:
    _kernel = None

BACKEND = "cython" if _kernel is not None else "python"


def run_kernel(st, fuel, record=False):
    status, counters, steps, labels, reason = _kernel.run(st, fuel, record)
    if status == 0:
        result = Final(st.graph)
    elif status == 1:
        result = FuelExhausted(st)
    else:
        result = Stuck(st, f"{reason} [{st.describe()}]")
    return ExecOutcome(result, counters, steps, None, labels, "cython")


def run_state(st, fuel, trace=False, debug=False, check_boxes=False, record=False, backend=None):
    backend = backend or BACKEND
    if backend == "cython" and (_kernel is None):
        raise MachineError("compiled kernel is not available")
    if backend == "cython" and not (trace or debug or check_boxes):
        return run_kernel(st, fuel, record)
    return run_python(st, fuel, trace, debug, check_boxes, record)


def run(g, fuel, **kw):
    """Execute the machine on the (1,0) graph ``g`` (mutated in place)."""
    return run_state(init_state(g), fuel, **kw)
