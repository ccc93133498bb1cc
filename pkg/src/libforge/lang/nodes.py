"""AST node types for the scripting language.

Every node carries a (line, col) span. Spans are excluded from equality so
that two trees built from differently formatted sources compare equal when
their structure matches.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Union


@dataclass
class Node:
    line: int = field(default=0, compare=False, repr=False, kw_only=True)
    col: int = field(default=0, compare=False, repr=False, kw_only=True)


# -- expressions -------------------------------------------------------------

@dataclass
class Const(Node):
    value: Any  # int | float | str | bool | None


@dataclass
class Name(Node):
    id: str


@dataclass
class ListExpr(Node):
    elts: list


@dataclass
class DictExpr(Node):
    keys: list
    values: list


@dataclass
class Call(Node):
    func: "Expr"
    args: list
    kwargs: list  # [(name, Expr)]


@dataclass
class BinOp(Node):
    op: str
    left: "Expr"
    right: "Expr"


@dataclass
class Compare(Node):
    left: "Expr"
    ops: list  # "==", "!=", "<", "<=", ">", ">=", "in", "not in"
    comparators: list


@dataclass
class BoolOp(Node):
    op: str  # "and" | "or"
    values: list


@dataclass
class Not(Node):
    operand: "Expr"


@dataclass
class Neg(Node):
    operand: "Expr"


@dataclass
class Subscript(Node):
    value: "Expr"
    index: "Expr"


Expr = Union[Const, Name, ListExpr, DictExpr, Call, BinOp, Compare, BoolOp, Not, Neg, Subscript]


# -- statements --------------------------------------------------------------

@dataclass
class FunctionDef(Node):
    name: str
    params: list
    body: list


@dataclass
class Assign(Node):
    target: Expr  # Name | Subscript
    value: Expr


@dataclass
class AugAssign(Node):
    target: Expr
    op: str
    value: Expr


@dataclass
class ExprStmt(Node):
    value: Expr


@dataclass
class For(Node):
    var: str
    iter: Expr
    body: list


@dataclass
class While(Node):
    test: Expr
    body: list


@dataclass
class If(Node):
    test: Expr
    body: list
    orelse: list


@dataclass
class Return(Node):
    value: Optional[Expr]


@dataclass
class Comment(Node):
    text: str  # without the leading '#'


Stmt = Union[FunctionDef, Assign, AugAssign, ExprStmt, For, While, If, Return, Comment]


@dataclass
class Module(Node):
    body: list
    source: str = field(default="", compare=False, repr=False)


def iter_child_nodes(node):
    """Yield the direct child nodes of ``node`` in source order."""
    if isinstance(node, (Module,)):
        yield from node.body
    elif isinstance(node, FunctionDef):
        yield from node.body
    elif isinstance(node, (Assign, AugAssign)):
        yield node.target
        yield node.value
    elif isinstance(node, ExprStmt):
        yield node.value
    elif isinstance(node, For):
        yield node.iter
        yield from node.body
    elif isinstance(node, While):
        yield node.test
        yield from node.body
    elif isinstance(node, If):
        yield node.test
        yield from node.body
        yield from node.orelse
    elif isinstance(node, Return):
        if node.value is not None:
            yield node.value
    elif isinstance(node, ListExpr):
        yield from node.elts
    elif isinstance(node, DictExpr):
        for k, v in zip(node.keys, node.values):
            yield k
            yield v
    elif isinstance(node, Call):
        yield node.func
        yield from node.args
        for _, v in node.kwargs:
            yield v
    elif isinstance(node, BinOp):
        yield node.left
        yield node.right
    elif isinstance(node, Compare):
        yield node.left
        yield from node.comparators
    elif isinstance(node, BoolOp):
        yield from node.values
    elif isinstance(node, (Not, Neg)):
        yield node.operand
    elif isinstance(node, Subscript):
        yield node.value
        yield node.index


def walk(node):
    """Pre-order traversal of every node below and including ``node``."""
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(list(iter_child_nodes(cur))))
