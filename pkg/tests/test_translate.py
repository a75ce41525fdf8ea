from collections import Counter

import pytest
from hypothesis import given, strategies as st

from goim import graph as G
from goim.graph import canonical, graph_eq, link_link_edges, validate
from goim.submachine import (
    ESubFrame, LVAppR, LookupFrame, NeedAppL, Next, free_vars_ctx, init_focus, plug, step_sub,
)
from goim.syntax import (
    Abs, App, ESub, Strategy, Var, free_vars, gen_closed_term, parse, size,
)
from goim.translate import (
    compose, compose_ctx, translate_answer_ctx, translate_closed, translate_eval_ctx,
    translate_focus, translate_term,
)

N = Strategy.NEED


# -- terms -------------------------------------------------------------------------

def test_variable_is_a_single_link():
    g = translate_term(Var("x"))
    assert g.n_nodes == 0
    assert g.inputs == g.outputs and g.annot[g.outputs[0]] == "x"


def test_identity_shape():
    g = translate_term(parse(r"\x. x"))
    assert (g.count(G.BANG), g.count(G.LAM), g.count(G.CONTRACT)) == (1, 1, 1)
    assert len(g.alive_nodes()) == 3
    assert g.outputs == []
    assert validate(g) == []


def test_free_occurrences_leave_boxes_through_doors():
    g = translate_term(parse(r"\y. x"))
    assert g.count(G.QUEST) == 1
    assert [g.annot[o] for o in g.outputs] == ["x"]
    # the unused binder gets a C node with no inputs
    c = g.kind.index(G.CONTRACT)
    assert g.arity[c] == 0


@pytest.mark.parametrize("s,kind", [(Strategy.NEED, G.APP_NEED), (Strategy.LV, G.APP_LV),
                                    (Strategy.RV, G.APP_RV)])
def test_application_node_per_strategy(s, kind):
    g = translate_term(parse("f a", s))
    assert g.count(kind) == 1 and g.count(G.DEREF) == 1
    assert sorted(g.annot[o] for o in g.outputs) == ["a", "f"]


def test_closed_translation_rejects_open_terms():
    with pytest.raises(ValueError):
        translate_closed(Var("x"))


@given(st.integers(0, 10**6), st.sampled_from(list(Strategy)), st.integers(2, 45))
def test_translation_invariants(seed, s, max_size):
    t = gen_closed_term(seed, max_size, s)
    g = translate_term(t)
    assert validate(g) == []
    assert link_link_edges(g) == []
    assert len(g.inputs) == 1 and g.outputs == []
    # one C node per binder, fed by every occurrence
    assert g.count(G.CONTRACT) == _binders(t)
    # no C node directly above another
    for n in range(g.n_nodes):
        if g.kind[n] == G.CONTRACT:
            assert g.kind[g.ldst[g.out0[n]]] != G.CONTRACT
    # linear size
    assert len(g.alive_nodes()) <= 4 * size(t)


def _binders(t):
    if isinstance(t, Var):
        return 0
    if isinstance(t, Abs):
        return 1 + _binders(t.body)
    if isinstance(t, App):
        return _binders(t.fun) + _binders(t.arg)
    return 1 + _binders(t.body) + _binders(t.bound)


def test_outputs_are_free_occurrences():
    t = parse(r"x (\y. y x) (z x)")
    g = translate_term(t)
    assert Counter(g.annot[o] for o in g.outputs) == free_vars(t)


def test_substitution_contracts_its_variable():
    t = ESub(App(N, Var("x"), Var("x")), "x", Abs("y", Var("y")))
    g = translate_term(t)
    c = [n for n in range(g.n_nodes) if g.kind[n] == G.CONTRACT and g.arity[n] == 2]
    assert len(c) == 1
    assert validate(g) == []


# -- contexts ----------------------------------------------------------------------

def reachable_foci(t, limit=200):
    f = init_focus(t)
    yield f
    for _ in range(limit):
        res = step_sub(f)
        if not isinstance(res, Next):
            return
        f = res.focus
        yield f


def _has_unboxed_frame(frames):
    for f in frames:
        if isinstance(f, LVAppR):
            return True
        if isinstance(f, LookupFrame) and _has_unboxed_frame(f.inner):
            return True
    return False


def test_hole_free_variables_follow_the_multiset():
    ctx = translate_eval_ctx([ESubFrame("x", Abs("y", Var("y")))], Counter({"x": 2, "z": 1}))
    assert ctx.hole_vars() == Counter({"x": 2, "z": 1})


def test_answer_context_plugged_with_value():
    frames = [ESubFrame("x", Abs("y", Var("y")))]
    v = Abs("z", Var("x"))
    ctx = translate_answer_ctx(frames, free_vars(v))
    assert graph_eq(compose(ctx, translate_term(v)), translate_term(plug(frames, v)))


def test_answer_context_rejects_other_frames():
    with pytest.raises(ValueError):
        translate_answer_ctx([NeedAppL(Var("x"))])


def test_plug_interface_mismatch_is_reported():
    ctx = translate_eval_ctx([ESubFrame("x", Abs("y", Var("y")))], Counter({"x": 1}))
    with pytest.raises(ValueError, match="interface mismatch"):
        compose(ctx, translate_term(Var("w")))


@given(st.integers(0, 10**6), st.sampled_from(list(Strategy)))
def test_decomposition_of_terms(seed, s):
    """Plugging a term's graph into its context's graph gives the whole term's graph."""
    t = gen_closed_term(seed, 30, s)
    for f in reachable_foci(t, 120):
        if _has_unboxed_frame(f.frames):
            # a reached function value has lost its box; compare with the focus translation
            g, hole = translate_focus(f.frames, f.window)
            assert validate(g) == []
            continue
        whole = translate_term(f.term())
        ctx = translate_eval_ctx(f.frames, free_vars(f.window))
        assert graph_eq(compose(ctx, translate_term(f.window)), whole)


@given(st.integers(0, 10**6), st.sampled_from(list(Strategy)), st.integers(0, 50))
def test_decomposition_of_contexts(seed, s, cut):
    """Composing the graphs of two contexts gives the graph of the composed context."""
    t = gen_closed_term(seed, 30, s)
    foci = list(reachable_foci(t, 120))
    f = foci[min(cut, len(foci) - 1)]
    m = free_vars(f.window)
    frames = f.frames
    for i in range(len(frames) + 1):
        outer, inner = frames[:i], frames[i:]
        whole = translate_eval_ctx(frames, m)
        inner_ctx = translate_eval_ctx(inner, m)
        outer_ctx = translate_eval_ctx(outer, free_vars_ctx(inner, m))
        got = compose_ctx(outer_ctx, inner_ctx)
        assert canonical(got.graph, {got.hole_in}) == canonical(whole.graph, {whole.hole_in})


@given(st.integers(0, 10**6), st.sampled_from(list(Strategy)))
def test_focus_translation_is_valid(seed, s):
    t = gen_closed_term(seed, 30, s)
    for f in reachable_foci(t, 80):
        g, hole = translate_focus(f.frames, f.window)
        assert validate(g) == []
        assert link_link_edges(g) == []
        assert g.lalive[hole]
