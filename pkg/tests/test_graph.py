import pytest
from hypothesis import given, strategies as st

from goim import graph as G
from goim.graph import (
    Graph, box_subgraphs, canonical, copy_box, dump, fuse_links, graph_eq, link_link_edges,
    validate,
)
from goim.syntax import Strategy, gen_closed_term, parse
from goim.translate import translate_term


def identity_graph():
    return translate_term(parse(r"\x. x"))


# -- validation ------------------------------------------------------------------

def test_translated_identity_is_valid():
    assert validate(identity_graph()) == []


def test_validate_reports_dangling_port():
    g = identity_graph()
    lam = g.kind.index(G.LAM)
    g.in1[lam] = G.NONE
    assert any("in1" in e or "port" in e for e in validate(g))


def test_validate_reports_wrong_contract_arity():
    g = identity_graph()
    c = g.kind.index(G.CONTRACT)
    g.arity[c] += 1
    assert validate(g)


def test_validate_reports_link_leaving_box_without_door():
    g = translate_term(parse(r"\x. \y. x"))
    # the inner box's door: make its output start at the inner lam instead
    q = g.kind.index(G.QUEST)
    g.kind[q] = G.DEREF
    assert validate(g)


def test_validate_reports_link_link_edge_on_interface():
    g = identity_graph()
    extra = g.add_link()
    g.lup[g.inputs[0]] = extra
    g.ldown[extra] = g.inputs[0]
    assert validate(g)


# -- fusion ----------------------------------------------------------------------

def chain_graph(n):
    """A lam node whose root is a chain of ``n`` joined links."""
    g = identity_graph()
    top = g.inputs[0]
    links = [g.add_link() for _ in range(n - 1)]
    lower = links + [top]
    for a, b in zip(lower, lower[1:]):
        g.lup[a] = b
        g.ldown[b] = a
    g.inputs = [lower[0]]
    return g


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_fuse_chains_to_single_link(n):
    g = chain_graph(n)
    fuse_links(g)
    assert link_link_edges(g) == []
    assert validate(g) == []
    assert graph_eq(g, identity_graph())


def test_fuse_is_idempotent():
    g = chain_graph(3)
    fuse_links(g)
    once = dump(g)
    fuse_links(g)
    assert dump(g) == once


def test_fuse_reports_aliases():
    g = chain_graph(3)
    alias = {}
    fuse_links(g, alias)
    assert set(alias.values()) == {g.inputs[0]}


# -- canonical forms ---------------------------------------------------------------

def test_graph_eq_reflexive_and_alpha_invariant():
    a = translate_term(parse(r"\x. \y. x y"))
    b = translate_term(parse(r"\p. \q. p q"))
    assert graph_eq(a, a) and graph_eq(a, b)


def test_graph_eq_distinguishes_terms():
    a = translate_term(parse(r"\x. \y. x y"))
    b = translate_term(parse(r"\x. \y. y x"))
    c = translate_term(parse(r"\x. \y. x y", Strategy.LV))
    assert not graph_eq(a, b)
    assert not graph_eq(a, c)


def test_graph_eq_ignores_node_numbering():
    g = translate_term(parse(r"(\x. x x) (\y. y)"))
    h = g.copy()
    # append dead padding so every id shifts
    h2 = Graph()
    h2.add_node(G.LAM)
    h2.kind[0] = G.DEAD
    h2.add_link()
    h2.lalive[0] = False
    from goim.translate import _embed
    _embed(h2, h)
    h2.inputs = [l + 1 for l in h.inputs]
    assert graph_eq(g, h2)


def test_marks_distinguish_positions():
    g = translate_term(parse(r"\x. x"))
    links = g.alive_links()
    assert canonical(g, {links[0]}) != canonical(g, {links[1]})


def test_canonical_treats_contract_inputs_as_unordered():
    g = translate_term(parse(r"\x. x (x x)"))
    h = g.copy()
    c = h.kind.index(G.CONTRACT)
    ins = h.contract_inputs(c)
    assert len(ins) == 3
    assert graph_eq(g, h)


def test_dump_is_deterministic():
    t = parse(r"(\x. x x) (\y. y)")
    assert dump(translate_term(t)) == dump(translate_term(t))


# -- boxes --------------------------------------------------------------------------

def test_box_subgraphs_have_one_input_per_box():
    g = translate_term(parse(r"\x. \y. x (y x)"))
    subs = box_subgraphs(g)
    assert len(subs) == len(g.boxes())
    for s in subs:
        assert len(s.inputs) == 1
        assert s.kind[0] == G.BANG


def shared_box_graph():
    """A box G(1,3) whose three doors feed two C nodes with five inputs in all.

    Returns (graph, bang, contract nodes).
    """
    g = translate_term(parse(r"(\f. f) (\a. x (y x))"))
    bang = max(g.boxes(), key=lambda b: len(g.box_doors(b)))
    assert len(g.box_doors(bang)) == 3
    by_var = {}
    for o in g.outputs:
        by_var.setdefault(g.annot[o], []).append(o)
    contracts = []
    outputs = []
    for var, links in sorted(by_var.items()):
        # one more occurrence of each variable, outside the box
        d = g.add_node(G.DEREF)
        extra_root = g.add_link()
        g.inputs.append(extra_root)
        g.attach(extra_root, d)
        c = g.add_node(G.CONTRACT)
        for l in links + [g.new_out(d)]:
            g.attach(l, c, None)
        g.arity[c] = len(links) + 1
        out = g.new_out(c)
        g.annot[out] = var
        outputs.append(out)
        contracts.append(c)
    g.outputs = outputs
    return g, bang, contracts


def family(g, contracts):
    """(number of C inputs, number of C nodes) of a contraction family."""
    return sum(g.arity[c] for c in contracts), len(contracts)


def test_worked_copy_instance_h52_to_h82():
    g, bang, contracts = shared_box_graph()
    assert validate(g) == []
    assert family(g, contracts) == (5, 2)
    outside = [n for n in range(g.n_nodes) if g.kind[n] == G.CONTRACT and not bang <= n < g.box_end[bang]]
    root = g.add_link()
    g.inputs.append(root)
    nb = copy_box(g, bang, root)
    assert family(g, contracts) == (8, 2)
    # the family keeps its C nodes; only the copy brings new (inner) ones
    assert [n for n in range(nb) if g.kind[n] == G.CONTRACT and not bang <= n < g.box_end[bang]] == outside
    assert validate(g) == []
    assert graph_eq(box_subgraphs(g)[g.boxes().index(nb)], box_subgraphs(g)[g.boxes().index(bang)])


def test_copy_of_closed_box_adds_no_contract_inputs():
    g = translate_term(parse(r"(\f. f) (\a. a)"))
    bang = g.boxes()[-1]
    assert g.box_doors(bang) == []
    before = [g.arity[n] for n in range(g.n_nodes) if g.kind[n] == G.CONTRACT]
    n_links = g.n_links
    root = g.add_link()
    g.inputs.append(root)
    nb = copy_box(g, bang, root)
    assert [g.arity[n] for n in range(nb) if g.kind[n] == G.CONTRACT] == before
    inner = [n for n in range(bang, g.box_end[bang]) if g.kind[n] == G.CONTRACT]
    assert [g.arity[n] for n in range(nb, g.box_end[nb]) if g.kind[n] == G.CONTRACT] == \
        [g.arity[n] for n in inner]
    assert g.n_links - n_links - 1 == sum(len(G._OUT_PORTS[g.kind[n]]) for n in g.box_members(bang))
    assert validate(g) == []


def test_copy_rejects_box_with_non_door_exit():
    g = translate_term(parse(r"(\f. f) (\a. x)"))
    bang = g.boxes()[-1]
    # the door's output goes to the interface, not to a C node
    root = g.add_link()
    with pytest.raises(ValueError, match="non-door"):
        copy_box(g, bang, root)


@given(st.integers(0, 10**6), st.sampled_from(list(Strategy)))
def test_copy_preserves_box_and_validity(seed, s):
    t = gen_closed_term(seed, 30, s)
    g = translate_term(t)
    top = [b for b in g.boxes() if all(
        g.kind[g.ldst[g.out0[q]]] == G.CONTRACT for q in g.box_doors(b))]
    if not top:
        return
    bang = top[-1]
    before = box_subgraphs(g)[g.boxes().index(bang)]
    root = g.add_link()
    g.inputs.append(root)
    nb = copy_box(g, bang, root)
    assert validate(g) == []
    subs = box_subgraphs(g)
    assert graph_eq(subs[g.boxes().index(nb)], before)
    assert graph_eq(subs[g.boxes().index(bang)], before)
