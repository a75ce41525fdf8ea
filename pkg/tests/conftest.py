import os

import pytest
from hypothesis import HealthCheck, settings

from goim import machine as M
from goim.syntax import Abs, App, ESub, Var

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BACKENDS = ["python"] + (["cython"] if M._kernel is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def alpha_key(t, env=None, depth=0):
    """A form of ``t`` that is equal for alpha-equivalent terms."""
    env = env or {}
    if isinstance(t, Var):
        return ("bound", depth - env[t.name]) if t.name in env else ("free", t.name)
    if isinstance(t, Abs):
        return ("lam", alpha_key(t.body, {**env, t.var: depth}, depth + 1))
    if isinstance(t, App):
        return ("app", t.strategy.value, alpha_key(t.fun, env, depth), alpha_key(t.arg, env, depth))
    return ("sub", alpha_key(t.body, {**env, t.var: depth}, depth + 1), alpha_key(t.bound, env, depth))


# -- acceptance summary ------------------------------------------------------

ACCEPTANCE = {}


def record_criterion(number, ok, text):
    ACCEPTANCE[number] = (ok, text)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {text}")
