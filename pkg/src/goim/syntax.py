"""Terms of the strategy-annotated lambda-calculus.

Terms are immutable dataclasses.  Applications carry their evaluation
strategy; a term handed to either engine uses a single strategy throughout
and is *pure* (no explicit substitutions) and closed.  Explicit
substitutions only ever appear in intermediate states of the sub-machine.
"""

from __future__ import annotations

import enum
import random
import re
from collections import Counter
from dataclasses import dataclass


class Strategy(enum.Enum):
    NEED = "need"
    LV = "lv"
    RV = "rv"

    @classmethod
    def parse(cls, text):
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown strategy {text!r} (expected need, lv or rv)") from None


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Abs:
    var: str
    body: "Term"


@dataclass(frozen=True, slots=True)
class App:
    strategy: Strategy
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True, slots=True)
class ESub:
    """``body[var <- bound]``."""

    body: "Term"
    var: str
    bound: "Term"


Term = Var | Abs | App | ESub


class ParseError(ValueError):
    def __init__(self, message, pos=None):
        self.pos = pos
        if pos is not None:
            message = f"{message} at position {pos}"
        super().__init__(message)


class StrategyError(ParseError):
    """Raised for terms mixing application strategies."""


# ---------------------------------------------------------------------------
# Multisets of variables

def without(m, x):
    """``M \\ x``: drop every occurrence of ``x``."""
    if x not in m:
        return m
    out = Counter(m)
    del out[x]
    return out


def free_vars(t):
    """Free variables of ``t`` as a multiset (a ``Counter``)."""
    out = Counter()
    _fv_into(t, out, frozenset())
    return out


def _fv_into(t, out, bound):
    # A binder's scope is its body only, so tracking bound names on the way
    # down implements "remove all x" without building intermediate multisets.
    while True:
        if isinstance(t, Var):
            if t.name not in bound:
                out[t.name] += 1
            return
        if isinstance(t, Abs):
            bound = bound | {t.var}
            t = t.body
        elif isinstance(t, App):
            _fv_into(t.fun, out, bound)
            t = t.arg
        else:
            _fv_into(t.body, out, bound | {t.var})
            t = t.bound


def is_closed(t):
    return not free_vars(t)


def is_pure(t):
    if isinstance(t, Var):
        return True
    if isinstance(t, Abs):
        return is_pure(t.body)
    if isinstance(t, App):
        return is_pure(t.fun) and is_pure(t.arg)
    return False


def binders(t):
    """All binder names of ``t`` (abstractions and substitutions), with repeats."""
    out = []
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Abs):
            out.append(t.var)
            stack.append(t.body)
        elif isinstance(t, App):
            stack.append(t.arg)
            stack.append(t.fun)
        elif isinstance(t, ESub):
            out.append(t.var)
            stack.append(t.bound)
            stack.append(t.body)
    return out


def is_barendregt(t):
    bs = binders(t)
    return len(bs) == len(set(bs))


def names(t):
    """Every variable name occurring in ``t``, bound or free."""
    out = set(binders(t))
    out.update(free_vars(t))
    return out


def strategies(t):
    out = set()
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Abs):
            stack.append(t.body)
        elif isinstance(t, App):
            out.add(t.strategy)
            stack.append(t.fun)
            stack.append(t.arg)
        elif isinstance(t, ESub):
            stack.append(t.body)
            stack.append(t.bound)
    return out


def size(t):
    """|x| = 1, |\\x.t| = |t| + 1, |t u| = |t[x<-u]| = |t| + |u| + 1."""
    n = 0
    stack = [t]
    while stack:
        t = stack.pop()
        n += 1
        if isinstance(t, Abs):
            stack.append(t.body)
        elif isinstance(t, App):
            stack.append(t.fun)
            stack.append(t.arg)
        elif isinstance(t, ESub):
            stack.append(t.body)
            stack.append(t.bound)
    return n


# ---------------------------------------------------------------------------
# Fresh names

_SUFFIX = re.compile(r"^(.*?)_(\d+)$")


class NameSupply:
    """Hands out names ``x_1, x_2, ...`` not yet used anywhere.

    One supply belongs to one parse or one evaluation, so traces do not depend
    on what else ran in the process.
    """

    def __init__(self, used=()):
        self.used = set(used)
        self._next = {}

    def fresh(self, name):
        m = _SUFFIX.match(name)
        base = m.group(1) if m and m.group(1) else name
        k = self._next.get(base, 1)
        while f"{base}_{k}" in self.used:
            k += 1
        out = f"{base}_{k}"
        self._next[base] = k + 1
        self.used.add(out)
        return out

    def reserve(self, t):
        self.used.update(names(t))


def rename_binders(t, supply):
    """Alpha-rename every binder of ``t`` to a fresh name."""
    return _rename(t, supply, {})


def _rename(t, supply, env):
    if isinstance(t, Var):
        return Var(env.get(t.name, t.name))
    if isinstance(t, Abs):
        new = supply.fresh(t.var)
        return Abs(new, _rename(t.body, supply, {**env, t.var: new}))
    if isinstance(t, App):
        return App(t.strategy, _rename(t.fun, supply, env), _rename(t.arg, supply, env))
    new = supply.fresh(t.var)
    return ESub(_rename(t.body, supply, {**env, t.var: new}), new, _rename(t.bound, supply, env))


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<lam>\\|λ)|(?P<ann>@(?:need|lv|rv)\b)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<punct>[().])|(?P<esub>\[)|(?P<bad>\S))"
)


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        kind = m.lastgroup
        if kind == "esub":
            raise ParseError("explicit substitutions are internal-only; input terms must be pure", m.start(kind))
        if kind == "bad":
            raise ParseError(f"unexpected character {m.group(kind)!r}", m.start(kind))
        toks.append((kind, m.group(kind), m.start(kind)))
    toks.append(("eof", None, len(text)))
    return toks


class _Parser:
    def __init__(self, text, default):
        self.toks = _tokenize(text)
        self.i = 0
        self.default = default

    def peek(self):
        return self.toks[self.i]

    def take(self, kind, value=None):
        tok = self.toks[self.i]
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            got = tok[1] if tok[1] is not None else "end of input"
            raise ParseError(f"expected {want!r}, found {got!r}", tok[2])
        self.i += 1
        return tok

    def term(self):
        tok = self.peek()
        if tok[0] == "lam":
            return self.abstraction()
        lhs = self.atom()
        while True:
            tok = self.peek()
            if tok[0] == "ann":
                self.i += 1
                strategy = Strategy(tok[1][1:])
                rhs = self.operand()
            elif tok[0] in ("ident", "lam") or tok[1] == "(":
                strategy = self.default
                rhs = self.operand()
            else:
                return lhs
            lhs = App(strategy, lhs, rhs)

    def operand(self):
        if self.peek()[0] == "lam":
            return self.abstraction()
        return self.atom()

    def abstraction(self):
        self.take("lam")
        name = self.take("ident")[1]
        self.take("punct", ".")
        return Abs(name, self.term())

    def atom(self):
        tok = self.peek()
        if tok[0] == "ident":
            self.i += 1
            return Var(tok[1])
        if tok[1] == "(":
            self.i += 1
            t = self.term()
            self.take("punct", ")")
            return t
        got = tok[1] if tok[1] is not None else "end of input"
        raise ParseError(f"expected a term, found {got!r}", tok[2])


def parse(text, default=Strategy.NEED):
    """Parse ``text`` into a pure term in Barendregt form.

    Juxtaposition uses ``default``; ``@need``/``@lv``/``@rv`` annotate a single
    application.  A term whose applications end up with more than one
    strategy is rejected.
    """
    p = _Parser(text, default)
    t = p.term()
    tok = p.peek()
    if tok[0] != "eof":
        raise ParseError(f"unexpected {tok[1]!r}", tok[2])
    used = strategies(t)
    if len(used) > 1:
        a, b = sorted(s.value for s in used)[:2]
        raise StrategyError(f"mixed-strategy term: applications use both {a} and {b}")
    return make_distinct(t)


def make_distinct(t):
    """Rename shadowing or repeated binders so all binders are distinct."""
    supply = NameSupply(names(t))
    seen = set()

    def go(t, env):
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, App):
            return App(t.strategy, go(t.fun, env), go(t.arg, env))
        new = t.var if t.var not in seen else supply.fresh(t.var)
        seen.add(new)
        if isinstance(t, Abs):
            return Abs(new, go(t.body, {**env, t.var: new}))
        return ESub(go(t.body, {**env, t.var: new}), new, go(t.bound, env))

    return go(t, {})


# ---------------------------------------------------------------------------
# Printing

@dataclass(frozen=True, slots=True)
class Window:
    """Marks the window of an enriched term; printing only."""

    term: Term


def pretty(t, implicit=None):
    """Render ``t`` in the input grammar.

    Applications whose strategy equals ``implicit`` print as juxtaposition,
    the rest carry an explicit annotation.  Substitutions print as
    ``t[x<-u]`` and a window as ``⟨t⟩``.
    """
    return _pp(t, implicit)


def _pp(t, imp):
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Window):
        return "⟨" + _pp(t.term, imp) + "⟩"
    if isinstance(t, Abs):
        return f"\\{t.var}. {_pp(t.body, imp)}"
    if isinstance(t, App):
        fun = _pp(t.fun, imp)
        if isinstance(t.fun, (Abs, ESub)):
            fun = f"({fun})"
        arg = _pp(t.arg, imp)
        if not isinstance(t.arg, (Var, Window)):
            arg = f"({arg})"
        op = " " if t.strategy == imp else f" @{t.strategy.value} "
        return f"{fun}{op}{arg}"
    body = _pp(t.body, imp)
    if not isinstance(t.body, (Var, ESub, Window)):
        body = f"({body})"
    return f"{body}[{t.var}<-{_pp(t.bound, imp)}]"


# ---------------------------------------------------------------------------
# Random closed terms

def gen_closed_term(seed, max_size, strategy=Strategy.NEED):
    """A pseudo-random pure closed term with at most ``max_size`` nodes.

    Deterministic in ``seed``.  Variables are only drawn from binders in
    scope, so the result is closed by construction; binders are numbered, so
    it is in Barendregt form.
    """
    if max_size < 2:
        return Abs("x", Var("x"))
    rng = random.Random(seed)
    target = rng.randint(2, max_size)
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"v{counter[0]}"

    def gen(n, scope, spine):
        if n == 1:
            # prefer recently bound variables a little
            k = len(scope)
            i = k - 1 - min(int(rng.expovariate(0.7)), k - 1)
            return Var(scope[i])
        can_app = n >= 3 and (scope or n >= 5)
        # applications outside any abstraction are where evaluation happens,
        # so make them likely there; otherwise most terms are values
        if can_app and rng.random() < (0.85 if spine else 0.55):
            lo = 1 if scope else 2
            hi = n - 1 - lo
            k = rng.randint(lo, hi)
            return App(strategy, gen(k, scope, spine), gen(n - 1 - k, scope, spine))
        name = fresh()
        return Abs(name, gen(n - 1, scope + [name], False))

    return gen(target, [], True)
