"""Storeless "sub-machine" semantics: the reference interpreter.

An enriched term is kept as a zipper: a list of context frames (outermost
first) and the windowed sub-term.  Each step applies one of the ten basic
rules under the current context:

    (1)  <t @need u>                  ->e  <t> @need u
    (2)  A[<\\x.t>] @need u            ->b  A[<t>[x<-u]]
    (3)  <t @lv u>                    ->e  <t> @lv u
    (4)  A[<\\x.t>] @lv u              ->e  A[\\x.t] @lv <u>
    (5)  A[\\x.t] @lv A'[<v>]          ->b  A[<t>[x<-A'[v]]]
    (6)  <t @rv u>                    ->e  t @rv <u>
    (7)  t @rv A[<v>]                 ->e  <t> @rv A[v]
    (8)  A[<\\x.t>] @rv A'[v]          ->b  A[<t>[x<-A'[v]]]
    (9)  E[<x>][x<-A[u]]              ->e  E[x][x<-A[<u>]]
    (10) E[x][x<-A[<v>]]              ->s  A[E[<v'>][x<-v]]

In (10) the copy ``v'`` put into the window gets fresh binder names and the
copy kept in the substitution keeps its own.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .syntax import (
    Abs, App, ESub, NameSupply, Strategy, Var, Window, free_vars, is_closed,
    is_pure, pretty, rename_binders, without,
)

BETA = "beta"
SIGMA = "sigma"
EPS = "eps"

RULE_LABEL = {1: EPS, 2: BETA, 3: EPS, 4: EPS, 5: BETA, 6: EPS, 7: EPS, 8: BETA, 9: EPS, 10: SIGMA}

DEFAULT_FUEL = 1_000_000


# ---------------------------------------------------------------------------
# Evaluation context frames

@dataclass(frozen=True, slots=True)
class NeedAppL:
    """``<.> @need arg``"""
    arg: object


@dataclass(frozen=True, slots=True)
class LVAppL:
    """``<.> @lv arg``"""
    arg: object


@dataclass(frozen=True, slots=True)
class LVAppR:
    """``A[v] @lv <.>``; ``value`` is the plugged answer ``A[v]``."""
    value: object


@dataclass(frozen=True, slots=True)
class RVAppR:
    """``fun @rv <.>``"""
    fun: object


@dataclass(frozen=True, slots=True)
class RVAppL:
    """``<.> @rv A[v]``"""
    value: object


@dataclass(frozen=True, slots=True)
class ESubFrame:
    """``<.>[var <- bound]``"""
    var: str
    bound: object


@dataclass(frozen=True, slots=True)
class LookupFrame:
    """``E'[x][x <- <.>]``: ``inner`` holds the frames of ``E'``."""
    inner: tuple
    var: str


def plug(frames, t):
    """Fill the hole of the context ``frames`` (outermost first) with ``t``."""
    for f in reversed(frames):
        t = plug_frame(f, t)
    return t


def plug_frame(f, t):
    if isinstance(f, ESubFrame):
        return ESub(t, f.var, f.bound)
    if isinstance(f, NeedAppL):
        return App(Strategy.NEED, t, f.arg)
    if isinstance(f, LVAppL):
        return App(Strategy.LV, t, f.arg)
    if isinstance(f, LVAppR):
        return App(Strategy.LV, f.value, t)
    if isinstance(f, RVAppR):
        return App(Strategy.RV, f.fun, t)
    if isinstance(f, RVAppL):
        return App(Strategy.RV, t, f.value)
    if isinstance(f, LookupFrame):
        return ESub(plug(f.inner, Var(f.var)), f.var, t)
    raise TypeError(f"not a context frame: {f!r}")


def peel_answer(t):
    """Split ``A[u]`` into the frames of ``A`` and the non-substitution ``u``."""
    frames = []
    while isinstance(t, ESub):
        frames.append(ESubFrame(t.var, t.bound))
        t = t.body
    return frames, t


def free_vars_ctx(frames, m):
    """``FV_M(E)`` for the context ``frames`` and hole multiset ``m``."""
    m = Counter(m)
    for f in reversed(frames):
        if isinstance(f, ESubFrame):
            m = without(m, f.var) + free_vars(f.bound)
        elif isinstance(f, (NeedAppL, LVAppL)):
            m = m + free_vars(f.arg)
        elif isinstance(f, (LVAppR, RVAppL)):
            m = free_vars(f.value) + m
        elif isinstance(f, RVAppR):
            m = free_vars(f.fun) + m
        elif isinstance(f, LookupFrame):
            m = without(free_vars_ctx(f.inner, Counter([f.var])), f.var) + m
        else:
            raise TypeError(f"not a context frame: {f!r}")
    return m


# ---------------------------------------------------------------------------
# Foci and steps

@dataclass
class Focus:
    frames: list
    window: object

    def term(self):
        """The underlying term, window erased."""
        return plug(self.frames, self.window)

    def pretty(self, implicit=None):
        return pretty(plug(self.frames, Window(self.window)), implicit)


class SubMachineError(ValueError):
    pass


def init_focus(t):
    if not is_pure(t):
        raise SubMachineError("input term must be pure")
    if not is_closed(t):
        fv = ", ".join(sorted(free_vars(t)))
        raise SubMachineError(f"input term must be closed (free: {fv})")
    return Focus([], t)


@dataclass(frozen=True)
class Next:
    focus: Focus
    label: str
    rule: int


@dataclass(frozen=True)
class Answer:
    answer: list        # frames of the answer context, all ESubFrame
    value: object

    def term(self):
        return plug(self.answer, self.value)


@dataclass(frozen=True)
class Stuck:
    focus: Focus
    reason: str


class _Engine:
    """Mutable zipper; ``advance`` applies one basic rule in place."""

    def __init__(self, frames, window, supply):
        self.frames = frames
        self.window = window
        self.supply = supply

    def advance(self):
        """Return the rule number applied, 0 at an answer, -1 when stuck."""
        w = self.window
        frames = self.frames
        if isinstance(w, App):
            s = w.strategy
            if s is Strategy.NEED:
                frames.append(NeedAppL(w.arg))
                self.window = w.fun
                return 1
            if s is Strategy.LV:
                frames.append(LVAppL(w.arg))
                self.window = w.fun
                return 3
            frames.append(RVAppR(w.fun))
            self.window = w.arg
            return 6
        if isinstance(w, Var):
            x = w.name
            for i in range(len(frames) - 1, -1, -1):
                f = frames[i]
                if type(f) is ESubFrame and f.var == x:
                    break
            else:
                self.reason = f"unbound variable {x}"
                return -1
            inner = tuple(frames[i + 1:])
            del frames[i:]
            frames.append(LookupFrame(inner, x))
            answer, u = peel_answer(f.bound)
            frames.extend(answer)
            self.window = u
            return 9
        if not isinstance(w, Abs):
            self.reason = "window holds an explicit substitution"
            return -1
        for j in range(len(frames) - 1, -1, -1):
            if type(frames[j]) is not ESubFrame:
                break
        else:
            return 0
        f = frames[j]
        kind = type(f)
        if kind is NeedAppL:
            del frames[j]
            frames.append(ESubFrame(w.var, f.arg))
            self.window = w.body
            return 2
        if kind is RVAppL:
            del frames[j]
            frames.append(ESubFrame(w.var, f.value))
            self.window = w.body
            return 8
        if kind is LVAppL:
            value = plug(frames[j + 1:], w)
            del frames[j:]
            frames.append(LVAppR(value))
            self.window = f.arg
            return 4
        if kind is RVAppR:
            value = plug(frames[j + 1:], w)
            del frames[j:]
            frames.append(RVAppL(value))
            self.window = f.fun
            return 7
        if kind is LVAppR:
            arg = plug(frames[j + 1:], w)
            del frames[j:]
            answer, lam = peel_answer(f.value)
            frames.extend(answer)
            frames.append(ESubFrame(lam.var, arg))
            self.window = lam.body
            return 5
        # LookupFrame
        answer = frames[j + 1:]
        del frames[j:]
        frames.extend(answer)
        frames.append(ESubFrame(f.var, w))
        frames.extend(f.inner)
        self.window = rename_binders(w, self.supply)
        return 10


def _supply_for(focus):
    supply = NameSupply()
    supply.reserve(focus.term())
    return supply


def step_sub(focus, supply=None):
    """Apply one basic rule to ``focus``; the input focus is left untouched."""
    if supply is None:
        supply = _supply_for(focus)
    eng = _Engine(list(focus.frames), focus.window, supply)
    rule = eng.advance()
    if rule == 0:
        return Answer(list(focus.frames), focus.window)
    if rule < 0:
        return Stuck(focus, eng.reason)
    return Next(Focus(eng.frames, eng.window), RULE_LABEL[rule], rule)


# ---------------------------------------------------------------------------
# Evaluation

@dataclass
class EvalOutcome:
    result: object                  # Answer | FuelExhausted | Stuck
    counts: dict
    steps: int
    rules: Counter = field(default_factory=Counter)
    trace: list | None = None

    @property
    def terminated(self):
        return isinstance(self.result, Answer)


@dataclass(frozen=True)
class FuelExhausted:
    focus: Focus


def _empty_counts():
    return {BETA: 0, SIGMA: 0, EPS: 0}


def evaluate(t, fuel=DEFAULT_FUEL, trace=False, show_focus=False, implicit=None):
    """Run the sub-machine on the pure closed term ``t`` for at most ``fuel`` steps.

    Trace records are ``{"i", "rule", "label"}`` dicts, plus ``"focus"``
    (the pretty-printed state after the step) when ``show_focus`` is set.
    """
    gen = iter_eval(t, fuel, trace, show_focus, implicit)
    while True:
        try:
            next(gen)
        except StopIteration as stop:
            return stop.value


def iter_eval(t, fuel=DEFAULT_FUEL, trace=False, show_focus=False, implicit=None):
    """Generator form of :func:`evaluate`: yields ``(rule, label)`` per step.

    The final :class:`EvalOutcome` is the generator's return value.
    """
    focus = init_focus(t)
    supply = _supply_for(focus)
    eng = _Engine(focus.frames, focus.window, supply)
    counts = _empty_counts()
    rules = Counter()
    records = [] if trace else None
    steps = 0
    result = None
    while True:
        if steps >= fuel:
            # fuel is spent, but an answer reached on the last step still counts
            if _at_answer(eng):
                result = Answer(eng.frames, eng.window)
            else:
                result = FuelExhausted(Focus(eng.frames, eng.window))
            break
        rule = eng.advance()
        if rule == 0:
            result = Answer(eng.frames, eng.window)
            break
        if rule < 0:
            result = Stuck(Focus(eng.frames, eng.window), eng.reason)
            break
        steps += 1
        label = RULE_LABEL[rule]
        counts[label] += 1
        rules[rule] += 1
        if records is not None:
            rec = {"i": steps - 1, "rule": rule, "label": label}
            if show_focus:
                rec["focus"] = Focus(eng.frames, eng.window).pretty(implicit)
            records.append(rec)
        yield rule, label
    return EvalOutcome(result, counts, steps, rules, records)


def _at_answer(eng):
    return isinstance(eng.window, Abs) and all(type(f) is ESubFrame for f in eng.frames)
