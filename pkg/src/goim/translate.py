"""Translations of terms and contexts into graphs, and graph composition.

Terms translate to graphs with one input (the root) and one output per free
variable occurrence, annotated with the variable's name:

    x            a single link, both input and output
    \\x. t        ! -> lam -> t ; the x-occurrences of t meet in one C node
                 feeding the lam's variable port; every other occurrence
                 leaves the box through its own ? door
    t @s u       @s with composition -> D -> t and argument -> u
    t[x<-u]      t, with its x-occurrences meeting in a C node feeding u

Only abstractions get boxes, each bound variable gets exactly one C node
(arity = its number of occurrences, possibly 0), and no link is ever joined
directly to another link.

Evaluation contexts translate to :class:`GraphCtx` values: graphs with a hole
whose root link and free-variable links are left dangling until something is
plugged in with :func:`compose`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from . import graph as G
from .graph import NONE, Graph, fuse_links
from .submachine import (
    ESubFrame, LookupFrame, LVAppL, LVAppR, NeedAppL, RVAppL, RVAppR,
)
from .syntax import Abs, App, ESub, Strategy, Var, free_vars

APP_KIND = {Strategy.NEED: G.APP_NEED, Strategy.LV: G.APP_LV, Strategy.RV: G.APP_RV}


def _merge(into, more):
    for x, links in more.items():
        into.setdefault(x, []).extend(links)
    return into


def _contract(g, links):
    c = g.add_node(G.CONTRACT)
    g.arity[c] = len(links)
    for l in links:
        g.attach(l, c, None)
    return c


def _term(g, t, root, unboxed=False):
    """Translate ``t`` above ``root``; return its occurrence links by name."""
    if isinstance(t, Var):
        return {t.name: [root]}
    if isinstance(t, App):
        app = g.add_node(APP_KIND[t.strategy])
        g.attach(root, app)
        d = g.add_node(G.DEREF)
        g.attach(g.new_out(app, "out0"), d)
        occ = _term(g, t.fun, g.new_out(d))
        return _merge(occ, _term(g, t.arg, g.new_out(app, "out1")))
    if isinstance(t, ESub):
        occ = _term(g, t.body, root, unboxed)
        c = _contract(g, occ.pop(t.var, []))
        return _merge(occ, _term(g, t.bound, g.new_out(c)))
    if isinstance(t, Abs):
        if unboxed:
            return _lambda(g, t, root)
        bang = g.add_node(G.BANG)
        g.attach(root, bang)
        occ = _lambda(g, t, g.new_out(bang))
        g.box_q[bang] = g.n_nodes
        outs = {}
        for x, links in occ.items():
            for l in links:
                q = g.add_node(G.QUEST)
                g.qowner[q] = bang
                g.attach(l, q)
                outs.setdefault(x, []).append(g.new_out(q))
        g.box_end[bang] = g.n_nodes
        return outs
    raise TypeError(f"cannot translate {t!r}")


def _lambda(g, t, root):
    lam = g.add_node(G.LAM)
    g.attach(root, lam)
    occ = _term(g, t.body, g.new_out(lam))
    c = _contract(g, occ.pop(t.var, []))
    g.attach(g.new_out(c), lam, "in1")
    return occ


def _finish(g, occ):
    for x in sorted(occ):
        for l in occ[x]:
            g.outputs.append(l)
            g.annot[l] = x
    return g


def translate_term(t):
    """``t`` as a graph with annotated outputs."""
    g = Graph()
    root = g.add_link()
    g.inputs.append(root)
    return _finish(g, _term(g, t, root))


def translate_closed(t):
    """The machine's starting graph for the closed term ``t``."""
    g = translate_term(t)
    if g.outputs:
        names = ", ".join(sorted(set(g.annot.values())))
        raise ValueError(f"term is not closed (free: {names})")
    return g


# ---------------------------------------------------------------------------
# Contexts

@dataclass
class GraphCtx:
    """A graph with a hole: ``hole_in`` awaits a root, ``hole_outs`` free links."""

    graph: Graph
    hole_in: int
    hole_outs: dict = field(default_factory=dict)

    def hole_vars(self):
        return Counter({x: len(ls) for x, ls in self.hole_outs.items() if ls})


def _ctx(g, frames, i, root, plug):
    if i == len(frames):
        return plug(g, root)
    f = frames[i]
    if isinstance(f, (NeedAppL, LVAppL, RVAppL)):
        strategy = {NeedAppL: Strategy.NEED, LVAppL: Strategy.LV, RVAppL: Strategy.RV}[type(f)]
        app = g.add_node(APP_KIND[strategy])
        g.attach(root, app)
        d = g.add_node(G.DEREF)
        g.attach(g.new_out(app, "out0"), d)
        occ = _ctx(g, frames, i + 1, g.new_out(d), plug)
        other = f.value if isinstance(f, RVAppL) else f.arg
        return _merge(occ, _term(g, other, g.new_out(app, "out1")))
    if isinstance(f, LVAppR):
        # the function has already been reached, so its box is gone
        app = g.add_node(G.APP_LV)
        g.attach(root, app)
        occ = _term(g, f.value, g.new_out(app, "out0"), unboxed=True)
        return _merge(occ, _ctx(g, frames, i + 1, g.new_out(app, "out1"), plug))
    if isinstance(f, RVAppR):
        app = g.add_node(G.APP_RV)
        g.attach(root, app)
        d = g.add_node(G.DEREF)
        g.attach(g.new_out(app, "out0"), d)
        occ = _term(g, f.fun, g.new_out(d))
        return _merge(occ, _ctx(g, frames, i + 1, g.new_out(app, "out1"), plug))
    if isinstance(f, ESubFrame):
        occ = _ctx(g, frames, i + 1, root, plug)
        c = _contract(g, occ.pop(f.var, []))
        return _merge(occ, _term(g, f.bound, g.new_out(c)))
    if isinstance(f, LookupFrame):
        occ = _ctx(g, f.inner, 0, root, lambda g, r: {f.var: [r]})
        c = _contract(g, occ.pop(f.var, []))
        return _merge(occ, _ctx(g, frames, i + 1, g.new_out(c), plug))
    raise TypeError(f"not a context frame: {f!r}")


def translate_eval_ctx(frames, m):
    """``E`` as a graph context whose hole has free variables ``m``."""
    g = Graph()
    root = g.add_link()
    g.inputs.append(root)
    hole = {}

    def plug(g, r):
        hole["in"] = r
        outs = {x: [g.add_link() for _ in range(k)] for x, k in sorted(Counter(m).items()) if k > 0}
        hole["outs"] = {x: list(ls) for x, ls in outs.items()}
        return outs

    occ = _ctx(g, list(frames), 0, root, plug)
    _finish(g, occ)
    return GraphCtx(g, hole["in"], hole["outs"])


def translate_answer_ctx(frames, m=()):
    """Answer contexts are evaluation contexts made of substitutions only."""
    if not all(isinstance(f, ESubFrame) for f in frames):
        raise ValueError("answer contexts may only contain substitutions")
    return translate_eval_ctx(frames, m)


def translate_focus(frames, window):
    """``E[t]`` with ``E`` translated as a context; returns (graph, window link)."""
    ctx = translate_eval_ctx(frames, free_vars(window))
    alias = {}
    g = compose(ctx, translate_term(window), alias)
    return g, alias.get(ctx.hole_in, ctx.hole_in)


# ---------------------------------------------------------------------------
# Composition

def _embed(dst, src):
    """Append a renumbered copy of ``src`` to ``dst``; return (node, link) offsets."""
    no, lo = dst.n_nodes, dst.n_links

    def sh(v, off):
        return v + off if v != NONE else NONE

    dst.kind.extend(src.kind)
    dst.arity.extend(src.arity)
    for name in ("in0", "in1", "out0", "out1"):
        getattr(dst, name).extend(sh(v, lo) for v in getattr(src, name))
    for name in ("box_q", "box_end", "qowner"):
        getattr(dst, name).extend(sh(v, no) for v in getattr(src, name))
    dst.lsrc.extend(sh(v, no) for v in src.lsrc)
    dst.ldst.extend(sh(v, no) for v in src.ldst)
    dst.lup.extend(sh(v, lo) for v in src.lup)
    dst.ldown.extend(sh(v, lo) for v in src.ldown)
    dst.lalive.extend(src.lalive)
    return no, lo


def _join(g, lower, upper):
    g.lup[lower] = upper
    g.ldown[upper] = lower


def _plug_links(ctx, g, other, lo):
    """Join ``other``'s root and annotated outputs to the hole of ``ctx``."""
    _join(g, ctx.hole_in, other.inputs[0] + lo)
    want = ctx.hole_vars()
    have = Counter(other.annot[o] for o in other.outputs)
    if want != have:
        raise ValueError(
            f"interface mismatch: hole expects {sorted(want.elements())}, "
            f"graph provides {sorted(have.elements())}")
    pending = {x: list(ls) for x, ls in ctx.hole_outs.items()}
    for o in other.outputs:
        _join(g, o + lo, pending[other.annot[o]].pop(0))


def compose(ctx, t_graph, alias=None):
    """Plug ``t_graph`` into ``ctx`` and fuse the joined links.

    ``alias`` (if given) receives the ids of links absorbed by fusion, mapped
    to the link that replaced them.
    """
    if len(t_graph.inputs) != 1:
        raise ValueError(f"interface mismatch: plugged graph has {len(t_graph.inputs)} inputs")
    g = ctx.graph.copy()
    _, lo = _embed(g, t_graph)
    _plug_links(ctx, g, t_graph, lo)
    return fuse_links(g, alias)


def compose_ctx(outer, inner):
    """``outer`` with ``inner`` plugged in: a context again."""
    g = outer.graph.copy()
    _, lo = _embed(g, inner.graph)
    _plug_links(outer, g, inner.graph, lo)
    alias = {}
    fuse_links(g, alias)

    def fix(l):
        return alias.get(l + lo, l + lo)

    outs = {x: [fix(l) for l in ls] for x, ls in inner.hole_outs.items()}
    return GraphCtx(g, fix(inner.hole_in), outs)


def plug_term(ctx, t):
    return compose(ctx, translate_term(t))
