import pytest
from hypothesis import given, strategies as st

from goim.submachine import (
    Answer, ESubFrame, FuelExhausted, Focus, LookupFrame, LVAppL, LVAppR, NeedAppL, Next,
    RVAppL, RVAppR, Stuck, SubMachineError, evaluate, init_focus, step_sub,
)
from goim.syntax import (
    Abs, App, ESub, Strategy, Var, free_vars, gen_closed_term, is_barendregt, is_closed,
    is_pure, parse,
)

from conftest import alpha_key

N, LV, RV = Strategy.NEED, Strategy.LV, Strategy.RV
I = Abs("y", Var("y"))


def run_rules(t, fuel=10_000):
    out = evaluate(t, fuel, trace=True)
    return [r["rule"] for r in out.trace], out


# -- single rules ----------------------------------------------------------------

def test_rule1_need_application_moves_left():
    t = App(N, Abs("x", Var("x")), I)
    nxt = step_sub(Focus([], t))
    assert isinstance(nxt, Next) and nxt.rule == 1 and nxt.label == "eps"
    assert nxt.focus.frames == [NeedAppL(I)] and nxt.focus.window == Abs("x", Var("x"))


def test_rule2_need_beta_creates_substitution():
    nxt = step_sub(Focus([NeedAppL(I)], Abs("x", Var("x"))))
    assert nxt.rule == 2 and nxt.label == "beta"
    assert nxt.focus.frames == [ESubFrame("x", I)] and nxt.focus.window == Var("x")


def test_rule3_and_4_left_to_right_visit_function_then_argument():
    t = App(LV, Abs("x", Var("x")), I)
    a = step_sub(Focus([], t))
    assert a.rule == 3 and a.focus.frames == [LVAppL(I)]
    b = step_sub(a.focus)
    assert b.rule == 4 and b.focus.frames == [LVAppR(Abs("x", Var("x")))] and b.focus.window == I


def test_rule5_lv_beta():
    nxt = step_sub(Focus([LVAppR(Abs("x", Var("x")))], I))
    assert nxt.rule == 5 and nxt.label == "beta"
    assert nxt.focus.frames == [ESubFrame("x", I)]


def test_rule6_7_8_right_to_left():
    t = App(RV, Abs("x", Var("x")), I)
    a = step_sub(Focus([], t))
    assert a.rule == 6 and a.focus.frames == [RVAppR(Abs("x", Var("x")))] and a.focus.window == I
    b = step_sub(a.focus)
    assert b.rule == 7 and b.focus.frames == [RVAppL(I)]
    c = step_sub(b.focus)
    assert c.rule == 8 and c.label == "beta" and c.focus.frames == [ESubFrame("x", I)]


def test_rule9_lookup_enters_substitution():
    f = Focus([ESubFrame("x", I)], Var("x"))
    nxt = step_sub(f)
    assert nxt.rule == 9 and nxt.label == "eps"
    assert nxt.focus.frames == [LookupFrame((), "x")] and nxt.focus.window == I


def test_rule10_substitution_copies_with_fresh_binders():
    f = Focus([LookupFrame((), "x")], I)
    nxt = step_sub(f)
    assert nxt.rule == 10 and nxt.label == "sigma"
    assert nxt.focus.frames == [ESubFrame("x", I)]
    w = nxt.focus.window
    assert isinstance(w, Abs) and w.var != "y" and alpha_key(w) == alpha_key(I)
    assert is_barendregt(nxt.focus.term())


def test_value_in_answer_context_is_answer():
    f = Focus([ESubFrame("x", I)], Abs("z", Var("z")))
    assert isinstance(step_sub(f), Answer)


def test_unbound_variable_is_stuck():
    res = step_sub(Focus([], Var("q")))
    assert isinstance(res, Stuck) and "q" in res.reason


def test_step_does_not_mutate_input():
    f = Focus([NeedAppL(I)], Abs("x", Var("x")))
    frames = list(f.frames)
    step_sub(f)
    assert f.frames == frames


def test_init_rejects_open_and_impure_terms():
    with pytest.raises(SubMachineError, match="closed"):
        init_focus(Var("x"))
    with pytest.raises(SubMachineError, match="pure"):
        init_focus(ESub(I, "x", I))


# -- whole runs ------------------------------------------------------------------

def test_need_identity_on_identity():
    rules, out = run_rules(parse(r"(\x. x) (\y. y)", N))
    assert rules == [1, 2, 9, 10]
    assert out.counts == {"beta": 1, "sigma": 1, "eps": 2}
    assert out.terminated


def test_lv_identity_on_identity():
    rules, out = run_rules(parse(r"(\x. x) (\y. y)", LV))
    assert rules == [3, 4, 5, 9, 10]
    assert out.counts == {"beta": 1, "sigma": 1, "eps": 3}


def test_rv_identity_on_identity():
    rules, out = run_rules(parse(r"(\x. x) (\y. y)", RV))
    assert rules == [6, 7, 8, 9, 10]
    assert out.counts == {"beta": 1, "sigma": 1, "eps": 3}


def test_need_does_not_evaluate_unused_argument():
    omega = r"((\a. a a) (\b. b b))"
    out = evaluate(parse(rf"(\x. \z. z) {omega}", N), 1000)
    assert out.terminated and out.counts["beta"] == 1
    # the value strategies evaluate the argument first and diverge
    for s in (LV, RV):
        assert isinstance(evaluate(parse(rf"(\x. \z. z) {omega}", s), 1000).result, FuelExhausted)


def test_need_shares_argument_evaluation():
    t = parse(r"(\x. x x) ((\w. w) (\y. y))", N)
    out = evaluate(t, 1000)
    assert out.terminated
    # the argument redex is reduced once, not once per occurrence
    assert out.counts["beta"] == 3


@pytest.mark.parametrize("s", list(Strategy))
def test_omega_exhausts_fuel(s):
    out = evaluate(parse(r"(\x. x x) (\x. x x)", s), 10_000)
    assert isinstance(out.result, FuelExhausted) and out.steps == 10_000


def test_answer_on_last_unit_of_fuel_counts():
    t = parse(r"(\x. x) (\y. y)", N)
    out = evaluate(t, 4)
    assert out.terminated and out.steps == 4


def test_evaluation_is_deterministic():
    for k in range(50):
        t = gen_closed_term(k, 30, N)
        a, b = evaluate(t, 2000, trace=True), evaluate(t, 2000, trace=True)
        assert a.trace == b.trace and a.counts == b.counts


def test_trace_with_focus_shows_window():
    out = evaluate(parse(r"(\x. x) (\y. y)", N), 100, trace=True, show_focus=True)
    assert all("⟨" in r["focus"] for r in out.trace)


# -- invariants along runs ----------------------------------------------------------

def _window_pure(f):
    return is_pure(f.window)


@given(st.integers(0, 10**6), st.sampled_from(list(Strategy)))
def test_invariants_hold_along_every_run(seed, s):
    t = gen_closed_term(seed, 30, s)
    f = init_focus(t)
    for _ in range(300):
        res = step_sub(f)
        if not isinstance(res, Next):
            assert not isinstance(res, Stuck), res.reason
            if isinstance(res, Answer):
                assert all(isinstance(a, ESubFrame) for a in res.answer)
                assert isinstance(res.value, Abs)
            break
        f = res.focus
        term = f.term()
        assert is_closed(term), "closedness"
        assert is_barendregt(term), "distinct binders"
        assert _window_pure(f), "window is pure"
