"""Static queries over ASTs: free names, comment stripping, definitions."""
from __future__ import annotations

import copy

from . import nodes as n
from .errors import ParseError
from .interpreter import BUILTIN_NAMES
from .parser import parse

EMBED_PRIMITIVES = frozenset({"embed"})


def _bound_names(module) -> set:
    bound = set()
    for node in n.walk(module):
        if isinstance(node, n.FunctionDef):
            bound.add(node.name)
            bound.update(node.params)
        elif isinstance(node, n.For):
            bound.add(node.var)
        elif isinstance(node, (n.Assign, n.AugAssign)) and isinstance(node.target, n.Name):
            bound.add(node.target.id)
    return bound


def called_names(module, embed_names=EMBED_PRIMITIVES) -> set:
    """Names appearing in call position, including calls inside string-literal
    programs handed to an embedding primitive."""
    called = set()
    for node in n.walk(module):
        if isinstance(node, n.Call) and isinstance(node.func, n.Name):
            called.add(node.func.id)
            if node.func.id in embed_names and node.args:
                first = node.args[0]
                if isinstance(first, n.Const) and isinstance(first.value, str):
                    try:
                        inner = parse(first.value)
                    except ParseError:
                        continue
                    called |= free_names(inner, frozenset(), embed_names)
    return called


def free_names(module, primitives=frozenset(), embed_names=EMBED_PRIMITIVES) -> set:
    """Called names that are neither defined in ``module`` nor primitives or builtins."""
    called = called_names(module, embed_names)
    return called - _bound_names(module) - set(primitives) - BUILTIN_NAMES


def strip_comments(module):
    """Deep copy of ``module`` with every comment statement removed."""
    clone = copy.deepcopy(module)

    def clean(body):
        kept = [s for s in body if not isinstance(s, n.Comment)]
        for s in kept:
            for attr in ("body", "orelse"):
                if hasattr(s, attr):
                    setattr(s, attr, clean(getattr(s, attr)))
        return kept

    clone.body = clean(clone.body)
    return clone


def function_defs(module) -> list:
    return [s for s in module.body if isinstance(s, n.FunctionDef)]


def first_comment(func: n.FunctionDef) -> str:
    """First ``#`` comment line inside a function body, or ``""``."""
    for node in n.walk(func):
        if isinstance(node, n.Comment):
            return node.text.strip()
    return ""
