"""The scripting language: parser, printer and interpreter."""
from .analysis import first_comment, free_names, function_defs, strip_comments
from .errors import BudgetExceeded, ExecError, LangError, ParseError
from .interpreter import (
    BUDGET_EXCEEDED, BUILTIN_NAMES, DEFAULT_BUDGET, OK, PARSE_ERROR, RUNTIME_ERROR,
    Env, ExecutionOutcome, Interpreter, Registry, Scope, eval_embedded, execute, run,
)
from .parser import parse
from .printer import to_source

__all__ = [
    "BUDGET_EXCEEDED", "BUILTIN_NAMES", "DEFAULT_BUDGET", "OK", "PARSE_ERROR", "RUNTIME_ERROR",
    "BudgetExceeded", "Env", "ExecError", "ExecutionOutcome", "Interpreter", "LangError",
    "ParseError", "Registry", "Scope", "eval_embedded", "execute", "first_comment",
    "free_names", "function_defs", "parse", "run", "strip_comments", "to_source",
]
