"""Recursive-descent parser producing :mod:`libforge.lang.nodes` trees.

Grammar (EBNF)::

    module     = { statement } EOF
    statement  = COMMENT NEWLINE | funcdef | for | while | if | simple NEWLINE
    funcdef    = "def" NAME "(" [ NAME { "," NAME } [","] ] ")" ":" block
    for        = "for" NAME "in" expr ":" block
    while      = "while" expr ":" block
    if         = "if" expr ":" block { "elif" expr ":" block } [ "else" ":" block ]
    block      = NEWLINE INDENT statement { statement } DEDENT | simple NEWLINE
    simple     = "return" [ expr ] | expr [ ( "=" | augop ) expr ]
    expr       = and_expr { "or" and_expr }
    and_expr   = not_expr { "and" not_expr }
    not_expr   = "not" not_expr | comparison
    comparison = arith { compop arith }
    arith      = term { ( "+" | "-" ) term }
    term       = factor { ( "*" | "/" | "//" | "%" ) factor }
    factor     = "-" factor | power
    power      = postfix [ "**" factor ]
    postfix    = atom { "(" [ args ] ")" | "[" expr "]" }
    args       = arg { "," arg } [","]      (positional before keyword)
    arg        = expr | NAME "=" expr
    atom       = NAME | NUMBER | STRING { STRING } | "True" | "False" | "None"
               | "(" expr ")" | "[" [ expr { "," expr } [","] ] "]"
               | "{" [ expr ":" expr { "," expr ":" expr } [","] ] "}"
"""
from __future__ import annotations

from . import nodes as n
from .errors import ParseError
from .lexer import Token, tokenize

AUG_OPS = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "//=": "//", "%=": "%", "**=": "**"}
COMPARE_OPS = {"==", "!=", "<", "<=", ">", ">="}


def _describe(tok: Token) -> str:
    if tok.type in ("NAME", "KEYWORD"):
        return repr(tok.value)
    if tok.type == "OP":
        return repr(tok.value)
    if tok.type == "NUMBER":
        return f"number {tok.value!r}"
    if tok.type == "STRING":
        return "string literal"
    return {"NEWLINE": "end of line", "INDENT": "indent", "DEDENT": "dedent",
            "EOF": "end of input", "COMMENT": "comment"}[tok.type]


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # -- helpers ------------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, type_, value=None) -> bool:
        t = self.tok
        return t.type == type_ and (value is None or t.value == value)

    def at_op(self, *ops) -> bool:
        return self.tok.type == "OP" and self.tok.value in ops

    def at_kw(self, *kws) -> bool:
        return self.tok.type == "KEYWORD" and self.tok.value in kws

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, type_, value=None, what=None) -> Token:
        if not self.at(type_, value):
            wanted = what or (repr(value) if value is not None else type_.lower())
            self.error(f"expected {wanted}, found {_describe(self.tok)}")
        return self.next()

    # -- statements ---------------------------------------------------------

    def parse_module(self) -> n.Module:
        body = []
        while not self.at("EOF"):
            if self.at("INDENT"):
                self.error("unexpected indent")
            if self.at("DEDENT"):
                self.error("unexpected dedent")
            body.append(self.statement())
        return n.Module(body, line=1, col=1)

    def statement(self):
        t = self.tok
        if t.type == "COMMENT":
            self.next()
            self.expect("NEWLINE")
            return n.Comment(t.value, line=t.line, col=t.col)
        if t.type == "KEYWORD":
            if t.value == "def":
                return self.funcdef()
            if t.value == "for":
                return self.for_stmt()
            if t.value == "while":
                return self.while_stmt()
            if t.value == "if":
                return self.if_stmt()
            if t.value in ("elif", "else"):
                self.error(f"{t.value!r} without a matching 'if'")
        stmt = self.simple()
        self.expect("NEWLINE", what="end of line")
        return stmt

    def block(self) -> list:
        self.expect("OP", ":")
        if not self.at("NEWLINE"):
            stmt = self.simple()
            self.expect("NEWLINE", what="end of line")
            return [stmt]
        self.next()
        if not self.at("INDENT"):
            self.error("expected an indented block")
        self.next()
        body = []
        while not self.at("DEDENT"):
            if self.at("EOF"):
                self.error("unexpected end of input in block")
            if self.at("INDENT"):
                self.error("unexpected indent")
            body.append(self.statement())
        self.next()
        if all(isinstance(s, n.Comment) for s in body):
            self.error("block contains no statements")
        return body

    def funcdef(self):
        start = self.next()
        name = self.expect("NAME", what="function name")
        self.expect("OP", "(")
        params = []
        while not self.at_op(")"):
            p = self.expect("NAME", what="parameter name")
            if self.at_op("="):
                self.error("default parameter values are not supported")
            if p.value in params:
                self.error(f"duplicate parameter {p.value!r}", p)
            params.append(p.value)
            if not self.at_op(","):
                break
            self.next()
        self.expect("OP", ")")
        body = self.block()
        return n.FunctionDef(name.value, params, body, line=start.line, col=start.col)

    def for_stmt(self):
        start = self.next()
        var = self.expect("NAME", what="loop variable")
        self.expect("KEYWORD", "in")
        it = self.expr()
        body = self.block()
        return n.For(var.value, it, body, line=start.line, col=start.col)

    def while_stmt(self):
        start = self.next()
        test = self.expr()
        body = self.block()
        return n.While(test, body, line=start.line, col=start.col)

    def if_stmt(self):
        start = self.next()
        test = self.expr()
        body = self.block()
        orelse = []
        if self.at_kw("elif"):
            orelse = [self.if_stmt()]
        elif self.at_kw("else"):
            self.next()
            orelse = self.block()
        return n.If(test, body, orelse, line=start.line, col=start.col)

    def simple(self):
        t = self.tok
        if self.at_kw("return"):
            self.next()
            value = None if self.at("NEWLINE") else self.expr()
            return n.Return(value, line=t.line, col=t.col)
        if self.at_kw("def", "for", "while", "if", "elif", "else"):
            self.error(f"unexpected {t.value!r}")
        target = self.expr()
        if self.at_op("="):
            self._check_target(target)
            self.next()
            value = self.expr()
            if self.at_op("="):
                self.error("chained assignment is not supported")
            return n.Assign(target, value, line=t.line, col=t.col)
        if self.tok.type == "OP" and self.tok.value in AUG_OPS:
            self._check_target(target)
            op = AUG_OPS[self.next().value]
            value = self.expr()
            return n.AugAssign(target, op, value, line=t.line, col=t.col)
        return n.ExprStmt(target, line=t.line, col=t.col)

    def _check_target(self, target):
        if not isinstance(target, (n.Name, n.Subscript)):
            self.error("invalid assignment target", self.tok)

    # -- expressions --------------------------------------------------------

    def expr(self):
        left = self.and_expr()
        if not self.at_kw("or"):
            return left
        values = [left]
        while self.at_kw("or"):
            self.next()
            values.append(self.and_expr())
        return n.BoolOp("or", values, line=left.line, col=left.col)

    def and_expr(self):
        left = self.not_expr()
        if not self.at_kw("and"):
            return left
        values = [left]
        while self.at_kw("and"):
            self.next()
            values.append(self.not_expr())
        return n.BoolOp("and", values, line=left.line, col=left.col)

    def not_expr(self):
        if self.at_kw("not"):
            t = self.next()
            return n.Not(self.not_expr(), line=t.line, col=t.col)
        return self.comparison()

    def comparison(self):
        left = self.arith()
        ops, comps = [], []
        while True:
            if self.at_op(*COMPARE_OPS):
                ops.append(self.next().value)
            elif self.at_kw("in"):
                self.next()
                ops.append("in")
            elif self.at_kw("not") and self.peek().type == "KEYWORD" and self.peek().value == "in":
                self.next()
                self.next()
                ops.append("not in")
            else:
                break
            comps.append(self.arith())
        if not ops:
            return left
        return n.Compare(left, ops, comps, line=left.line, col=left.col)

    def arith(self):
        left = self.term()
        while self.at_op("+", "-"):
            op = self.next().value
            left = n.BinOp(op, left, self.term(), line=left.line, col=left.col)
        return left

    def term(self):
        left = self.factor()
        while self.at_op("*", "/", "//", "%"):
            op = self.next().value
            left = n.BinOp(op, left, self.factor(), line=left.line, col=left.col)
        return left

    def factor(self):
        if self.at_op("-"):
            t = self.next()
            return n.Neg(self.factor(), line=t.line, col=t.col)
        if self.at_op("+"):
            self.error("unary '+' is not supported")
        return self.power()

    def power(self):
        base = self.postfix()
        if self.at_op("**"):
            self.next()
            return n.BinOp("**", base, self.factor(), line=base.line, col=base.col)
        return base

    def postfix(self):
        node = self.atom()
        while True:
            if self.at_op("("):
                node = self.call(node)
            elif self.at_op("["):
                self.next()
                index = self.expr()
                if self.at_op(":"):
                    self.error("slices are not supported")
                self.expect("OP", "]")
                node = n.Subscript(node, index, line=node.line, col=node.col)
            elif self.at_op("."):
                self.error("attribute access is not supported")
            else:
                return node

    def call(self, func):
        open_tok = self.next()
        args, kwargs = [], []
        seen = set()
        while not self.at_op(")"):
            if self.at("NEWLINE") or self.at("EOF"):
                self.error("malformed call: missing ')'", open_tok)
            if self.at_op("*", "**"):
                self.error("malformed call: star arguments are not supported")
            if self.at("NAME") and self.peek().type == "OP" and self.peek().value == "=":
                key = self.next().value
                self.next()
                if key in seen:
                    self.error(f"malformed call: repeated keyword argument {key!r}")
                seen.add(key)
                kwargs.append((key, self.expr()))
            else:
                if kwargs:
                    self.error("malformed call: positional argument follows keyword argument")
                args.append(self.expr())
            if not self.at_op(","):
                break
            self.next()
        if not self.at_op(")"):
            self.error(f"malformed call: expected ',' or ')', found {_describe(self.tok)}")
        self.next()
        return n.Call(func, args, kwargs, line=func.line, col=func.col)

    def atom(self):
        t = self.tok
        if t.type == "NAME":
            self.next()
            return n.Name(t.value, line=t.line, col=t.col)
        if t.type == "NUMBER":
            self.next()
            return n.Const(t.value, line=t.line, col=t.col)
        if t.type == "STRING":
            self.next()
            value = t.value
            while self.at("STRING"):
                value += self.next().value
            return n.Const(value, line=t.line, col=t.col)
        if t.type == "KEYWORD" and t.value in ("True", "False", "None"):
            self.next()
            return n.Const({"True": True, "False": False, "None": None}[t.value], line=t.line, col=t.col)
        if self.at_op("("):
            self.next()
            if self.at_op(")"):
                self.error("tuples are not supported")
            inner = self.expr()
            if self.at_op(","):
                self.error("tuples are not supported")
            self.expect("OP", ")")
            return inner
        if self.at_op("["):
            self.next()
            elts = []
            while not self.at_op("]"):
                elts.append(self.expr())
                if self.at_kw("for"):
                    self.error("comprehensions are not supported")
                if not self.at_op(","):
                    break
                self.next()
            self.expect("OP", "]")
            return n.ListExpr(elts, line=t.line, col=t.col)
        if self.at_op("{"):
            self.next()
            keys, values = [], []
            while not self.at_op("}"):
                keys.append(self.expr())
                self.expect("OP", ":")
                values.append(self.expr())
                if not self.at_op(","):
                    break
                self.next()
            self.expect("OP", "}")
            return n.DictExpr(keys, values, line=t.line, col=t.col)
        self.error(f"unexpected {_describe(t)}")


def parse(source: str) -> n.Module:
    """Parse program text into a :class:`Module`.

    Raises :class:`ParseError` carrying the line and column of the first
    offending token.
    """
    module = Parser(tokenize(source)).parse_module()
    module.source = source
    return module


def parse_expr(source: str):
    p = Parser(tokenize(source))
    e = p.expr()
    p.expect("NEWLINE", what="end of expression")
    p.expect("EOF", what="end of input")
    return e
