"""Two interpreters for the lambda-calculus under call-by-need and
left-to-right / right-to-left call-by-value: a sub-machine over terms with
explicit substitutions, and a token-guided graph-rewriting machine."""

from .syntax import Strategy, parse, pretty, size, free_vars, gen_closed_term

__version__ = "0.1.0"

__all__ = ["Strategy", "parse", "pretty", "size", "free_vars", "gen_closed_term", "__version__"]
