"""Graphs with !-boxes, stored in a flat arena.

Nodes and links live in parallel integer lists indexed by id.  A link ``l``
runs from the output port of ``lsrc[l]`` (below) to the input port of
``ldst[l]`` (above); ``-1`` on either end marks an interface link.  Tokens
travel *up* from a link towards ``ldst`` and *down* towards ``lsrc``.

Port layout per node kind (inputs below, outputs above):

    LAM        in0 root, in1 bound variable (from its C node)   out0 body
    APP_*      in0                                             out0 composition, out1 argument
    BANG       in0                                             out0 box content
    QUEST      in0 from inside the box                         out0 leaving the box
    DEREF      in0                                             out0
    CONTRACT   ``arity`` inputs, found as links with ldst == c   out0

A box is the contiguous node range ``[bang, box_end[bang])``: the ! node,
then the content, then the auxiliary doors ``[box_q[bang], box_end[bang])``.
Dead nodes may sit inside a range; they are simply skipped.  Ids are never
reused within one graph.

Links may also be joined directly to links (``lup``/``ldown``), which only
happens transiently while composing graphs; :func:`fuse_links` removes them.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field

DEAD = 0
LAM = 1
APP_NEED = 2
APP_LV = 3
APP_RV = 4
BANG = 5
QUEST = 6
DEREF = 7
CONTRACT = 8

KIND_NAMES = {
    DEAD: "dead", LAM: "lam", APP_NEED: "@need", APP_LV: "@lv", APP_RV: "@rv",
    BANG: "!", QUEST: "?", DEREF: "D", CONTRACT: "C",
}

APP_KINDS = (APP_NEED, APP_LV, APP_RV)

NONE = -1

# ports each kind really uses (C inputs are handled separately)
_IN_PORTS = {
    LAM: ("in0", "in1"), APP_NEED: ("in0",), APP_LV: ("in0",), APP_RV: ("in0",),
    BANG: ("in0",), QUEST: ("in0",), DEREF: ("in0",), CONTRACT: (),
}
_OUT_PORTS = {
    LAM: ("out0",), APP_NEED: ("out0", "out1"), APP_LV: ("out0", "out1"),
    APP_RV: ("out0", "out1"), BANG: ("out0",), QUEST: ("out0",), DEREF: ("out0",),
    CONTRACT: ("out0",),
}


@dataclass
class Graph:
    kind: list = field(default_factory=list)
    arity: list = field(default_factory=list)
    in0: list = field(default_factory=list)
    in1: list = field(default_factory=list)
    out0: list = field(default_factory=list)
    out1: list = field(default_factory=list)
    box_q: list = field(default_factory=list)
    box_end: list = field(default_factory=list)
    qowner: list = field(default_factory=list)

    lsrc: list = field(default_factory=list)
    ldst: list = field(default_factory=list)
    lup: list = field(default_factory=list)
    ldown: list = field(default_factory=list)
    lalive: list = field(default_factory=list)

    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    # variable annotation per output link; used by translations only
    annot: dict = field(default_factory=dict)

    # -- allocation -------------------------------------------------------

    def add_node(self, kind):
        self.kind.append(kind)
        self.arity.append(0)
        for col in (self.in0, self.in1, self.out0, self.out1,
                    self.box_q, self.box_end, self.qowner):
            col.append(NONE)
        return len(self.kind) - 1

    def add_link(self, src=NONE, dst=NONE):
        self.lsrc.append(src)
        self.ldst.append(dst)
        self.lup.append(NONE)
        self.ldown.append(NONE)
        self.lalive.append(True)
        return len(self.lsrc) - 1

    def new_out(self, node, port="out0"):
        """Allocate a link leaving ``node`` through ``port``."""
        link = self.add_link(src=node)
        getattr(self, port)[node] = link
        return link

    def attach(self, link, node, port="in0"):
        """Make ``link`` enter ``node`` through ``port`` (None for C inputs)."""
        self.ldst[link] = node
        if port is not None:
            getattr(self, port)[node] = link

    # -- queries ----------------------------------------------------------

    @property
    def n_nodes(self):
        return len(self.kind)

    @property
    def n_links(self):
        return len(self.lsrc)

    def alive_nodes(self):
        return [n for n, k in enumerate(self.kind) if k != DEAD]

    def alive_links(self):
        return [l for l, a in enumerate(self.lalive) if a]

    def count(self, kind):
        return sum(1 for k in self.kind if k == kind)

    def contract_inputs(self, c):
        return [l for l, d in enumerate(self.ldst) if d == c and self.lalive[l]]

    def boxes(self):
        return [n for n, k in enumerate(self.kind) if k == BANG]

    def box_members(self, bang):
        return [n for n in range(bang, self.box_end[bang]) if self.kind[n] != DEAD]

    def box_doors(self, bang):
        return [n for n in range(self.box_q[bang], self.box_end[bang]) if self.kind[n] == QUEST]

    def in_port(self, link):
        """Name of the input port of ``ldst[link]`` that ``link`` enters."""
        n = self.ldst[link]
        if n < 0:
            return None
        if self.kind[n] == CONTRACT:
            return "in"
        if self.in0[n] == link:
            return "in0"
        if self.in1[n] == link:
            return "in1"
        return "?"

    def out_port(self, link):
        n = self.lsrc[link]
        if n < 0:
            return None
        if self.out0[n] == link:
            return "out0"
        if self.out1[n] == link:
            return "out1"
        return "?"

    def copy(self):
        g = Graph()
        for name in _COLUMNS:
            setattr(g, name, list(getattr(self, name)))
        g.annot = dict(self.annot)
        return g

    def kill_node(self, n):
        self.kind[n] = DEAD

    def kill_link(self, l):
        self.lalive[l] = False
        self.lsrc[l] = NONE
        self.ldst[l] = NONE


_COLUMNS = (
    "kind", "arity", "in0", "in1", "out0", "out1", "box_q", "box_end", "qowner",
    "lsrc", "ldst", "lup", "ldown", "lalive", "inputs", "outputs",
)


# ---------------------------------------------------------------------------
# Validation

def validate(g):
    """List every broken invariant of ``g``; an empty list means valid."""
    errs = []
    n_nodes, n_links = g.n_nodes, g.n_links
    inputs, outputs = set(g.inputs), set(g.outputs)
    if len(inputs) != len(g.inputs):
        errs.append("interface: repeated input link")
    if len(outputs) != len(g.outputs):
        errs.append("interface: repeated output link")

    def check_link_id(l, where):
        if not (0 <= l < n_links) or not g.lalive[l]:
            errs.append(f"{where}: refers to missing link {l}")
            return False
        return True

    fan_in = Counter()
    for n in range(n_nodes):
        k = g.kind[n]
        if k == DEAD:
            continue
        name = f"node {n} ({KIND_NAMES.get(k, k)})"
        if k not in _IN_PORTS:
            errs.append(f"{name}: unknown kind")
            continue
        for port in _IN_PORTS[k]:
            l = getattr(g, port)[n]
            if check_link_id(l, f"{name}.{port}") and g.ldst[l] != n:
                errs.append(f"{name}.{port}: link {l} does not enter this node")
        for port in _OUT_PORTS[k]:
            l = getattr(g, port)[n]
            if check_link_id(l, f"{name}.{port}") and g.lsrc[l] != n:
                errs.append(f"{name}.{port}: link {l} does not leave this node")
        if k == QUEST:
            b = g.qowner[n]
            if not (0 <= b < n_nodes) or g.kind[b] != BANG or not (g.box_q[b] <= n < g.box_end[b]):
                errs.append(f"{name}: auxiliary door without a matching box")
        if k == BANG:
            q, end = g.box_q[n], g.box_end[n]
            if not (n < q <= end <= n_nodes):
                errs.append(f"{name}: malformed box range [{n}, {q}, {end})")

    for l in range(n_links):
        if not g.lalive[l]:
            continue
        s, d = g.lsrc[l], g.ldst[l]
        if s != NONE and (s >= n_nodes or g.kind[s] == DEAD):
            errs.append(f"link {l}: source {s} is not a live node")
        if d != NONE:
            if d >= n_nodes or g.kind[d] == DEAD:
                errs.append(f"link {l}: target {d} is not a live node")
            elif g.kind[d] == CONTRACT:
                fan_in[d] += 1
            elif l not in (g.in0[d], g.in1[d]):
                errs.append(f"link {l}: target {d} does not list it as an input")
        if s != NONE and s < n_nodes and g.kind[s] != DEAD and l not in (g.out0[s], g.out1[s]):
            errs.append(f"link {l}: source {s} does not list it as an output")
        up, down = g.lup[l], g.ldown[l]
        if up != NONE:
            if d != NONE:
                errs.append(f"link {l}: source of two edges")
            elif not check_link_id(up, f"link {l}") or g.ldown[up] != l:
                errs.append(f"link {l}: dangling link-link edge")
        if down != NONE and s != NONE:
            errs.append(f"link {l}: target of two edges")
        if s == NONE and down == NONE and l not in inputs:
            errs.append(f"link {l}: no source but not an input")
        if d == NONE and up == NONE and l not in outputs:
            errs.append(f"link {l}: no target but not an output")
        if l in inputs and (s != NONE or down != NONE):
            errs.append(f"link {l}: input link is the target of an edge")
        if l in outputs and (d != NONE or up != NONE):
            errs.append(f"link {l}: output link is the source of an edge")

    for n in range(n_nodes):
        if g.kind[n] == CONTRACT and fan_in[n] != g.arity[n]:
            errs.append(f"node {n} (C): arity {g.arity[n]} but {fan_in[n]} inputs")

    errs.extend(_validate_boxes(g))
    return errs


def _validate_boxes(g):
    errs = []
    spans = []
    for b in g.boxes():
        q, end = g.box_q[b], g.box_end[b]
        if not (b < q <= end <= g.n_nodes):
            continue
        spans.append((b, end))
        inside = range(b, end)
        if not (b < g.ldst[g.out0[b]] < q):
            errs.append(f"box {b}: no content")
        for n in range(b + 1, end):
            k = g.kind[n]
            if k == DEAD:
                continue
            if n >= q:
                if k != QUEST or g.qowner[n] != b:
                    errs.append(f"box {b}: node {n} in door range is not one of its doors")
                continue
            if k == QUEST and g.qowner[n] == b:
                errs.append(f"box {b}: door {n} sits in the content range")
            # every edge leaving a content node must stay in the box
            for port in _OUT_PORTS[k]:
                l = getattr(g, port)[n]
                if l < 0 or not g.lalive[l]:
                    continue
                d = g.ldst[l]
                if d == NONE or d not in inside:
                    errs.append(f"box {b}: link {l} leaves the box without a door")
            for port in _IN_PORTS[k]:
                l = getattr(g, port)[n]
                if l < 0 or not g.lalive[l]:
                    continue
                s = g.lsrc[l]
                if s == NONE or s not in inside:
                    errs.append(f"box {b}: link {l} enters the box below its ! node")
        for d in g.box_doors(b):
            s = g.lsrc[g.in0[d]]
            if s == NONE or not (b < s < q):
                errs.append(f"box {b}: door {d} is not fed from the content")
    # proper nesting: intervals either disjoint or nested
    spans.sort()
    stack = []
    for lo, hi in spans:
        while stack and stack[-1] <= lo:
            stack.pop()
        if stack and hi > stack[-1]:
            errs.append(f"box {lo}: overlaps an enclosing box")
        stack.append(hi)
    return errs


def link_link_edges(g):
    """Links joined directly to another link."""
    return [l for l in range(g.n_links) if g.lalive[l] and g.lup[l] != NONE]


# ---------------------------------------------------------------------------
# Link fusion

def fuse_links(g, alias=None):
    """Collapse every chain of directly joined links into its lowest link.

    Works in place and returns ``g``.  Interface lists are updated so the
    surviving link takes the place of the ones it absorbed; ``alias``, if
    given, is filled with absorbed -> surviving link ids.
    """
    replaced = {} if alias is None else alias
    for l in range(g.n_links):
        if not g.lalive[l] or g.ldown[l] != NONE or g.lup[l] == NONE:
            continue
        top = l
        while g.lup[top] != NONE:
            nxt = g.lup[top]
            if top != l:
                replaced[top] = l
                g.kill_link(top)
            top = nxt
        replaced[top] = l
        d = g.ldst[top]
        g.lup[l] = NONE
        g.ldst[l] = d
        if d != NONE and g.kind[d] != CONTRACT:
            if g.in0[d] == top:
                g.in0[d] = l
            elif g.in1[d] == top:
                g.in1[d] = l
        g.kill_link(top)
        g.lup[top] = g.ldown[top] = NONE
    for l in range(g.n_links):
        if not g.lalive[l]:
            g.lup[l] = g.ldown[l] = NONE
    if replaced:
        g.inputs = [replaced.get(l, l) for l in g.inputs]
        outs = []
        annot = {}
        for l in g.outputs:
            new = replaced.get(l, l)
            if g.ldst[new] != NONE or (new in outs):
                continue
            outs.append(new)
            if l in g.annot:
                annot[new] = g.annot[l]
        g.outputs = outs
        g.annot = annot
    return g


# ---------------------------------------------------------------------------
# Box copying

def copy_box(g, bang, root):
    """Append a fresh copy of the box of ``bang``; ``root`` becomes its input.

    Each copied auxiliary door gets a new outer link into the node the
    original door feeds (a C node, whose arity grows by one).  Returns the id
    of the new ! node.
    """
    lo, end = bang, g.box_end[bang]
    off = g.n_nodes - lo
    link_map = {}
    # nodes first, so every in-range id has its image
    for n in range(lo, end):
        m = g.add_node(g.kind[n])
        g.arity[m] = g.arity[n]
        if g.kind[n] == BANG:
            g.box_q[m] = g.box_q[n] + off
            g.box_end[m] = g.box_end[n] + off
        if g.kind[n] == QUEST:
            g.qowner[m] = g.qowner[n] + off
    for n in range(lo, end):
        k = g.kind[n]
        if k == DEAD:
            continue
        m = n + off
        for port in _OUT_PORTS[k]:
            l = getattr(g, port)[n]
            d = g.ldst[l]
            if lo <= d < end:
                new = g.add_link(src=m, dst=d + off)
                if g.kind[d] != CONTRACT:
                    if g.in0[d] == l:
                        g.in0[d + off] = new
                    else:
                        g.in1[d + off] = new
            else:
                if k != QUEST or d == NONE or g.kind[d] != CONTRACT:
                    raise ValueError(f"copy_box: link {l} leaves box {bang} through a non-door")
                new = g.add_link(src=m, dst=d)
                g.arity[d] += 1
            getattr(g, port)[m] = new
            link_map[l] = new
    nb = lo + off
    g.in0[nb] = root
    g.ldst[root] = nb
    return nb


# ---------------------------------------------------------------------------
# Canonical forms

def _neighbours(g, n, link_pos):
    """Ports of ``n`` in traversal order: (port tag, link, other node)."""
    k = g.kind[n]
    out = []
    for port in _OUT_PORTS[k]:
        l = getattr(g, port)[n]
        out.append((port, l, g.ldst[l]))
    for port in _IN_PORTS[k]:
        l = getattr(g, port)[n]
        out.append((port, l, g.lsrc[l]))
    return out


def canonical(g, marks=()):
    """A string that is equal for two graphs exactly when they are isomorphic.

    Isomorphism respects node kinds, ports, the order of the inputs and the
    box structure; outputs and the inputs of C nodes are unordered.  Links in
    ``marks`` are tagged (used to compare token positions).
    """
    index = {}
    order = []

    def visit_from(starts):
        queue = deque(starts)
        while queue:
            n = queue.popleft()
            if n in index or n == NONE or g.kind[n] == DEAD:
                continue
            index[n] = len(order)
            order.append(n)
            for _, _, m in _neighbours(g, n, None):
                if m != NONE and m not in index:
                    queue.append(m)

    visit_from([g.ldst[l] for l in g.inputs])
    # nodes hanging off weakening C nodes are not reached from the inputs
    while True:
        pending = [n for n in range(g.n_nodes)
                   if g.kind[n] == CONTRACT and n not in index and g.arity[n] == 0]
        if not pending:
            break
        best = None
        for c in pending:
            snapshot = (dict(index), list(order))
            visit_from([c])
            enc = _encode(g, index, order[len(snapshot[1]):], marks)
            if best is None or enc < best[0]:
                best = (enc, c)
            index.clear()
            index.update(snapshot[0])
            del order[len(snapshot[1]):]
        visit_from([best[1]])
    missed = [n for n in range(g.n_nodes) if g.kind[n] != DEAD and n not in index]
    # anything else is unreachable garbage without a weakening anchor; fold it
    # in by id so the result is at least deterministic
    visit_from(missed)
    inputs = ",".join(_end(g, index, l, "up") for l in g.inputs)
    return f"in[{inputs}]|" + _encode(g, index, order, marks) + "|" + _encode_boxes(g, index)


def _end(g, index, l, side):
    n = g.ldst[l] if side == "up" else g.lsrc[l]
    if n == NONE:
        return "if"
    port = g.in_port(l) if side == "up" else g.out_port(l)
    return f"{index.get(n, '?')}.{port}"


def _encode(g, index, nodes, marks):
    parts = []
    for n in nodes:
        k = g.kind[n]
        ports = []
        for port in _OUT_PORTS[k]:
            l = getattr(g, port)[n]
            tag = "*" if l in marks else ""
            ports.append(f"{port}>{_end(g, index, l, 'up')}{tag}")
        if k == CONTRACT:
            fan = sorted(_end(g, index, l, "down") + ("*" if l in marks else "")
                         for l in g.contract_inputs(n))
            ports.append("ins<" + "+".join(fan))
        else:
            for port in _IN_PORTS[k]:
                l = getattr(g, port)[n]
                tag = "*" if l in marks else ""
                ports.append(f"{port}<{_end(g, index, l, 'down')}{tag}")
        arity = f"/{g.arity[n]}" if k == CONTRACT else ""
        parts.append(f"{index[n]}:{KIND_NAMES[k]}{arity}(" + " ".join(ports) + ")")
    return ";".join(parts)


def _encode_boxes(g, index):
    out = []
    for b in g.boxes():
        members = sorted(index[n] for n in g.box_members(b))
        doors = sorted(index[n] for n in g.box_doors(b))
        out.append((index[b], members, doors))
    out.sort()
    return ";".join(f"box{b}:{m}:{d}" for b, m, d in out)


def graph_eq(g1, g2, marks1=(), marks2=()):
    if len(g1.inputs) != len(g2.inputs) or len(g1.outputs) != len(g2.outputs):
        return False
    return canonical(g1, marks1) == canonical(g2, marks2)


def box_subgraphs(g):
    """Each live box of ``g`` as a standalone graph (doors included).

    The box's ! input becomes the only input and the door outputs become the
    outputs.
    """
    return [extract_box(g, b) for b in g.boxes()]


def extract_box(g, bang):
    lo, end = bang, g.box_end[bang]
    sub = Graph()
    node_map = {}
    for n in range(lo, end):
        if g.kind[n] == DEAD:
            continue
        m = sub.add_node(g.kind[n])
        node_map[n] = m
        sub.arity[m] = g.arity[n]
    for n, m in node_map.items():
        if g.kind[n] == BANG:
            sub.box_q[m] = _first_at_or_after(node_map, g.box_q[n], g.box_end[n])
            sub.box_end[m] = _first_at_or_after(node_map, g.box_end[n], end)
        if g.kind[n] == QUEST:
            sub.qowner[m] = node_map[g.qowner[n]]
    root = sub.add_link()
    sub.inputs.append(root)
    sub.attach(root, node_map[lo])
    for n, m in node_map.items():
        k = g.kind[n]
        for port in _OUT_PORTS[k]:
            l = getattr(g, port)[n]
            new = sub.new_out(m, port)
            d = g.ldst[l]
            if d in node_map:
                sub.attach(new, node_map[d], None if g.kind[d] == CONTRACT else g.in_port(l))
            else:
                sub.outputs.append(new)
    return sub


def _first_at_or_after(node_map, n, limit):
    # dead nodes are dropped, so a range bound maps to the next live image
    for k in range(n, limit):
        if k in node_map:
            return node_map[k]
    after = [m for k, m in node_map.items() if k >= limit]
    return min(after) if after else len(node_map)


# ---------------------------------------------------------------------------
# Debug dump

def dump(g):
    """Deterministic text form: one line per live node, then one per box."""
    lines = [f"inputs {' '.join(map(str, g.inputs))}",
             f"outputs {' '.join(_annotated(g, l) for l in g.outputs)}"]
    for n in range(g.n_nodes):
        k = g.kind[n]
        if k == DEAD:
            continue
        outs = " ".join(str(getattr(g, p)[n]) for p in _OUT_PORTS[k])
        if k == CONTRACT:
            ins = " ".join(map(str, g.contract_inputs(n)))
            lines.append(f"node {n} C{g.arity[n]} in [{ins}] out [{outs}]")
        else:
            ins = " ".join(str(getattr(g, p)[n]) for p in _IN_PORTS[k])
            lines.append(f"node {n} {KIND_NAMES[k]} in [{ins}] out [{outs}]")
    for b in g.boxes():
        doors = " ".join(map(str, g.box_doors(b)))
        members = " ".join(map(str, g.box_members(b)))
        lines.append(f"box {b} doors [{doors}] members [{members}]")
    return "\n".join(lines) + "\n"


def _annotated(g, l):
    name = g.annot.get(l)
    return f"{l}:{name}" if name else str(l)
