"""Canonical source rendering of ASTs (4-space indentation)."""
from __future__ import annotations

from . import nodes as n

# binding strength; higher binds tighter
_PREC = {
    "or": 1, "and": 2, "not": 3, "cmp": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "//": 6, "%": 6,
    "neg": 7, "**": 8, "postfix": 9, "atom": 10,
}


def _prec(e) -> int:
    if isinstance(e, n.BoolOp):
        return _PREC[e.op]
    if isinstance(e, n.Not):
        return _PREC["not"]
    if isinstance(e, n.Compare):
        return _PREC["cmp"]
    if isinstance(e, n.BinOp):
        return _PREC[e.op]
    if isinstance(e, n.Neg):
        return _PREC["neg"]
    if isinstance(e, (n.Call, n.Subscript)):
        return _PREC["postfix"]
    if isinstance(e, n.Const) and isinstance(e.value, (int, float)) and not isinstance(e.value, bool):
        # keeps "(-1) ** 2" style cases stable when a literal is negative
        return _PREC["neg"] if e.value < 0 else _PREC["atom"]
    return _PREC["atom"]


def _string(s: str) -> str:
    if "\n" in s and '"""' not in s and not s.endswith('"'):
        body = s.replace("\\", "\\\\")
        return f'"""{body}"""'
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    out = out.replace("\r", "\\r").replace("\0", "\\0")
    return f'"{out}"'


def _wrap(e, min_prec: int) -> str:
    text = expr_to_str(e)
    return f"({text})" if _prec(e) < min_prec else text


def expr_to_str(e) -> str:
    if isinstance(e, n.Const):
        v = e.value
        if isinstance(v, str):
            return _string(v)
        return repr(v)
    if isinstance(e, n.Name):
        return e.id
    if isinstance(e, n.ListExpr):
        return "[" + ", ".join(expr_to_str(x) for x in e.elts) + "]"
    if isinstance(e, n.DictExpr):
        items = (f"{expr_to_str(k)}: {expr_to_str(v)}" for k, v in zip(e.keys, e.values))
        return "{" + ", ".join(items) + "}"
    if isinstance(e, n.Call):
        parts = [expr_to_str(a) for a in e.args]
        parts += [f"{k}={expr_to_str(v)}" for k, v in e.kwargs]
        return f"{_wrap(e.func, _PREC['postfix'])}({', '.join(parts)})"
    if isinstance(e, n.Subscript):
        return f"{_wrap(e.value, _PREC['postfix'])}[{expr_to_str(e.index)}]"
    if isinstance(e, n.BinOp):
        p = _PREC[e.op]
        if e.op == "**":
            # right-associative; the right operand may be a unary minus
            return f"{_wrap(e.left, p + 1)} ** {_wrap(e.right, _PREC['neg'])}"
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    if isinstance(e, n.Neg):
        return f"-{_wrap(e.operand, _PREC['neg'])}"
    if isinstance(e, n.Not):
        return f"not {_wrap(e.operand, _PREC['not'])}"
    if isinstance(e, n.BoolOp):
        p = _PREC[e.op]
        return f" {e.op} ".join(_wrap(v, p + 1) for v in e.values)
    if isinstance(e, n.Compare):
        p = _PREC["cmp"]
        parts = [_wrap(e.left, p + 1)]
        for op, c in zip(e.ops, e.comparators):
            parts.append(op)
            parts.append(_wrap(c, p + 1))
        return " ".join(parts)
    raise TypeError(f"not an expression node: {e!r}")


def _block(body, depth, out):
    for stmt in body:
        _stmt(stmt, depth, out)


def _stmt(s, depth, out):
    pad = "    " * depth
    if isinstance(s, n.Comment):
        out.append(f"{pad}#{s.text}")
    elif isinstance(s, n.FunctionDef):
        out.append(f"{pad}def {s.name}({', '.join(s.params)}):")
        _block(s.body, depth + 1, out)
    elif isinstance(s, n.Assign):
        out.append(f"{pad}{expr_to_str(s.target)} = {expr_to_str(s.value)}")
    elif isinstance(s, n.AugAssign):
        out.append(f"{pad}{expr_to_str(s.target)} {s.op}= {expr_to_str(s.value)}")
    elif isinstance(s, n.ExprStmt):
        out.append(f"{pad}{expr_to_str(s.value)}")
    elif isinstance(s, n.Return):
        out.append(f"{pad}return" if s.value is None else f"{pad}return {expr_to_str(s.value)}")
    elif isinstance(s, n.For):
        out.append(f"{pad}for {s.var} in {expr_to_str(s.iter)}:")
        _block(s.body, depth + 1, out)
    elif isinstance(s, n.While):
        out.append(f"{pad}while {expr_to_str(s.test)}:")
        _block(s.body, depth + 1, out)
    elif isinstance(s, n.If):
        out.append(f"{pad}if {expr_to_str(s.test)}:")
        _block(s.body, depth + 1, out)
        orelse = s.orelse
        while len(orelse) == 1 and isinstance(orelse[0], n.If):
            elif_ = orelse[0]
            out.append(f"{pad}elif {expr_to_str(elif_.test)}:")
            _block(elif_.body, depth + 1, out)
            orelse = elif_.orelse
        if orelse:
            out.append(f"{pad}else:")
            _block(orelse, depth + 1, out)
    else:
        raise TypeError(f"not a statement node: {s!r}")


def to_source(node) -> str:
    """Render a module, statement list, statement or expression as source."""
    if isinstance(node, n.Module):
        body = node.body
    elif isinstance(node, list):
        body = node
    elif isinstance(node, n.Node) and not isinstance(node, (n.Const, n.Name, n.ListExpr, n.DictExpr, n.Call,
                                                            n.BinOp, n.Compare, n.BoolOp, n.Not, n.Neg,
                                                            n.Subscript)):
        body = [node]
    else:
        return expr_to_str(node)
    out: list[str] = []
    _block(body, 0, out)
    return "\n".join(out) + ("\n" if out else "")
