"""Tree-walking interpreter.

A program runs against a :class:`Registry` of domain primitives and an
opaque domain state. Every evaluated statement and expression node costs one
unit of a step budget so that runaway programs terminate.
"""
from __future__ import annotations

import operator
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

from . import nodes as n
from .errors import BudgetExceeded, ExecError, LangError, ParseError
from .parser import parse

DEFAULT_BUDGET = 100_000
MAX_CALL_DEPTH = 100

OK = "ok"
PARSE_ERROR = "parse-error"
RUNTIME_ERROR = "runtime-error"
BUDGET_EXCEEDED = "budget-exceeded"


@dataclass(frozen=True)
class Registry:
    """Primitive functions and constants of one domain.

    Functions are called as ``fn(interp, *args, **kwargs)``; they reach the
    domain state through ``interp.state``.
    """

    domain: str
    functions: Mapping[str, Callable] = field(default_factory=dict)
    constants: Mapping[str, Any] = field(default_factory=dict)

    def names(self) -> frozenset:
        return frozenset(self.functions) | frozenset(self.constants)


EMPTY_REGISTRY = Registry("none")


@dataclass
class UserFunction:
    name: str
    params: list
    body: list
    closure: "Scope"

    def __repr__(self):
        return f"<function {self.name}>"


@dataclass(frozen=True)
class Primitive:
    name: str
    fn: Callable

    def __repr__(self):
        return f"<primitive {self.name}>"


@dataclass(frozen=True)
class Builtin:
    name: str
    fn: Callable

    def __repr__(self):
        return f"<builtin {self.name}>"


class Scope:
    __slots__ = ("vars", "parent")

    def __init__(self, vars=None, parent=None):
        self.vars = dict(vars or {})
        self.parent = parent

    def lookup(self, name):
        scope = self
        while scope is not None:
            if name in scope.vars:
                return True, scope.vars[name]
            scope = scope.parent
        return False, None


@dataclass
class Env:
    registry: Registry = EMPTY_REGISTRY
    state: Any = None
    budget: int = DEFAULT_BUDGET
    globals: Scope = field(default_factory=Scope)
    stdout: list = field(default_factory=list)
    calls: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("step budget must be positive")


@dataclass
class ExecutionOutcome:
    status: str
    answer: Any = None
    effects: Any = None
    stdout: str = ""
    error: str = ""
    steps: int = 0
    calls: dict = field(default_factory=dict)
    variables: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OK


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def _render(v) -> str:
    return v if isinstance(v, str) else repr(v) if isinstance(v, (list, dict)) else str(v)


def _builtin_print(interp, *args):
    interp.env.stdout.append(" ".join(_render(a) for a in args) + "\n")


def _builtin_range(interp, *args):
    for a in args:
        if not isinstance(a, int) or isinstance(a, bool):
            raise ExecError(f"range() arguments must be integers, got {type(a).__name__}")
    if not 1 <= len(args) <= 3:
        raise ExecError(f"range() takes 1 to 3 arguments ({len(args)} given)")
    return range(*args)


def _plain(fn):
    return lambda interp, *a, **kw: fn(*a, **kw)


BUILTINS = {
    "range": Builtin("range", _builtin_range),
    "print": Builtin("print", _builtin_print),
    "len": Builtin("len", _plain(len)),
    "abs": Builtin("abs", _plain(abs)),
    "min": Builtin("min", _plain(min)),
    "max": Builtin("max", _plain(max)),
    "sum": Builtin("sum", _plain(sum)),
    "int": Builtin("int", _plain(int)),
    "float": Builtin("float", _plain(float)),
    "str": Builtin("str", _plain(_render)),
    "bool": Builtin("bool", _plain(bool)),
    "round": Builtin("round", _plain(round)),
    "list": Builtin("list", _plain(list)),
    # handled specially: needs the calling scope
    "locals": Builtin("locals", None),
}

BUILTIN_NAMES = frozenset(BUILTINS)

_BINOPS = {
    "+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv,
    "//": operator.floordiv, "%": operator.mod, "**": operator.pow,
}

_CMPOPS = {
    "==": operator.eq, "!=": operator.ne, "<": operator.lt, "<=": operator.le,
    ">": operator.gt, ">=": operator.ge,
    "in": lambda a, b: a in b, "not in": lambda a, b: a not in b,
}

_SEQ_LIMIT = 1_000_000


def _type_name(v) -> str:
    return "None" if v is None else type(v).__name__


class Interpreter:
    def __init__(self, env: Env):
        self.env = env
        self.depth = 0
        self.steps = 0

    @property
    def state(self):
        return self.env.state

    def _tick(self, node):
        if self.env.budget <= 0:
            raise BudgetExceeded("step budget exhausted", node.line, node.col)
        self.env.budget -= 1
        self.steps += 1

    # -- statements ---------------------------------------------------------

    def run_module(self, module: n.Module):
        try:
            self.exec_block(module.body, self.env.globals)
        except _Return:
            raise ExecError("'return' outside function") from None

    def exec_block(self, body, scope):
        for stmt in body:
            self.exec_stmt(stmt, scope)

    def exec_stmt(self, s, scope):
        if isinstance(s, n.Comment):
            return
        self._tick(s)
        try:
            self._exec_stmt(s, scope)
        except ExecError as e:
            if not e.line:
                e.line, e.col = s.line, s.col
            raise

    def _exec_stmt(self, s, scope):
        if isinstance(s, n.ExprStmt):
            self.eval(s.value, scope)
        elif isinstance(s, n.Assign):
            self._assign(s.target, self.eval(s.value, scope), scope)
        elif isinstance(s, n.AugAssign):
            current = self.eval(s.target, scope)
            value = self._binop(s.op, current, self.eval(s.value, scope))
            self._assign(s.target, value, scope)
        elif isinstance(s, n.For):
            iterable = self.eval(s.iter, scope)
            if isinstance(iterable, dict):
                iterable = list(iterable)
            elif not isinstance(iterable, (range, list, str)):
                raise ExecError(f"cannot iterate over {_type_name(iterable)}", s.iter.line, s.iter.col)
            for item in iterable:
                scope.vars[s.var] = item
                self.exec_block(s.body, scope)
        elif isinstance(s, n.While):
            while self._truthy(self.eval(s.test, scope)):
                self.exec_block(s.body, scope)
        elif isinstance(s, n.If):
            if self._truthy(self.eval(s.test, scope)):
                self.exec_block(s.body, scope)
            else:
                self.exec_block(s.orelse, scope)
        elif isinstance(s, n.Return):
            raise _Return(None if s.value is None else self.eval(s.value, scope))
        elif isinstance(s, n.FunctionDef):
            if s.name in self.env.registry.names() or s.name in BUILTIN_NAMES:
                raise ExecError(f"cannot define function {s.name!r}: name is a primitive")
            scope.vars[s.name] = UserFunction(s.name, list(s.params), s.body, scope)
        else:  # pragma: no cover - parser never produces other nodes
            raise ExecError(f"unsupported statement {type(s).__name__}")

    def _assign(self, target, value, scope):
        if isinstance(target, n.Name):
            scope.vars[target.id] = value
            return
        container = self.eval(target.value, scope)
        index = self.eval(target.index, scope)
        if not isinstance(container, (list, dict)):
            raise ExecError(f"{_type_name(container)} does not support item assignment")
        try:
            container[index] = value
        except (IndexError, TypeError) as e:
            raise ExecError(str(e)) from None

    @staticmethod
    def _truthy(v) -> bool:
        try:
            return bool(v)
        except Exception as e:  # noqa: BLE001 - domain objects may refuse bool()
            raise ExecError(f"cannot use {_type_name(v)} as a condition: {e}") from None

    # -- expressions --------------------------------------------------------

    def eval(self, e, scope):
        self._tick(e)
        if isinstance(e, n.Const):
            return e.value
        if isinstance(e, n.Name):
            return self._lookup(e, scope)
        if isinstance(e, n.Call):
            return self._call_expr(e, scope)
        if isinstance(e, n.BinOp):
            left = self.eval(e.left, scope)
            right = self.eval(e.right, scope)
            try:
                return self._binop(e.op, left, right)
            except ExecError as err:
                err.line, err.col = e.line, e.col
                raise
        if isinstance(e, n.Compare):
            left = self.eval(e.left, scope)
            for op, comp in zip(e.ops, e.comparators):
                right = self.eval(comp, scope)
                try:
                    ok = _CMPOPS[op](left, right)
                except TypeError:
                    raise ExecError(
                        f"unsupported comparison {op!r} between {_type_name(left)} and {_type_name(right)}",
                        e.line, e.col) from None
                if not ok:
                    return False
                left = right
            return True
        if isinstance(e, n.BoolOp):
            value = None
            for sub in e.values:
                value = self.eval(sub, scope)
                truth = self._truthy(value)
                if e.op == "and" and not truth:
                    return value
                if e.op == "or" and truth:
                    return value
            return value
        if isinstance(e, n.Not):
            return not self._truthy(self.eval(e.operand, scope))
        if isinstance(e, n.Neg):
            v = self.eval(e.operand, scope)
            try:
                return -v
            except TypeError:
                raise ExecError(f"bad operand type for unary -: {_type_name(v)}", e.line, e.col) from None
        if isinstance(e, n.Subscript):
            container = self.eval(e.value, scope)
            index = self.eval(e.index, scope)
            try:
                return container[index]
            except (IndexError, KeyError) as err:
                raise ExecError(f"{type(err).__name__.lower().replace('error', '')} {err}".strip(),
                                e.line, e.col) from None
            except TypeError:
                raise ExecError(f"{_type_name(container)} is not subscriptable by {_type_name(index)}",
                                e.line, e.col) from None
        if isinstance(e, n.ListExpr):
            return [self.eval(x, scope) for x in e.elts]
        if isinstance(e, n.DictExpr):
            out = {}
            for k, v in zip(e.keys, e.values):
                key = self.eval(k, scope)
                try:
                    out[key] = self.eval(v, scope)
                except TypeError:
                    raise ExecError(f"unhashable dict key of type {_type_name(key)}", k.line, k.col) from None
            return out
        raise ExecError(f"unsupported expression {type(e).__name__}", e.line, e.col)

    def _lookup(self, e: n.Name, scope):
        found, value = scope.lookup(e.id)
        if found:
            return value
        reg = self.env.registry
        if e.id in reg.constants:
            return reg.constants[e.id]
        if e.id in reg.functions:
            return Primitive(e.id, reg.functions[e.id])
        if e.id in BUILTINS:
            return BUILTINS[e.id]
        raise ExecError(f"unbound name {e.id}", e.line, e.col)

    def _binop(self, op, left, right):
        if op == "**" and isinstance(left, int) and isinstance(right, int) and abs(right) > 10_000 \
                and abs(left) > 1:
            raise ExecError("exponent too large")
        if op == "*":
            for seq, count in ((left, right), (right, left)):
                if isinstance(seq, (str, list)) and isinstance(count, int) and count * max(len(seq), 1) > _SEQ_LIMIT:
                    raise ExecError("sequence repetition too large")
        try:
            return _BINOPS[op](left, right)
        except ZeroDivisionError:
            raise ExecError("division by zero") from None
        except (TypeError, OverflowError, ValueError):
            raise ExecError(
                f"unsupported operand types for {op}: {_type_name(left)} and {_type_name(right)}") from None

    def _call_expr(self, e: n.Call, scope):
        func = self.eval(e.func, scope)
        args = [self.eval(a, scope) for a in e.args]
        kwargs = {k: self.eval(v, scope) for k, v in e.kwargs}
        try:
            return self.call(func, args, kwargs, scope)
        except ExecError as err:
            if not err.line:
                err.line, err.col = e.line, e.col
            raise

    def call(self, func, args, kwargs, scope=None):
        if isinstance(func, UserFunction):
            return self._call_user(func, args, kwargs)
        if isinstance(func, Builtin):
            if func.name == "locals":
                if args or kwargs:
                    raise ExecError("locals() takes no arguments")
                return dict((scope or self.env.globals).vars)
            return self._call_native(func.name, func.fn, args, kwargs)
        if isinstance(func, Primitive):
            return self._call_native(func.name, func.fn, args, kwargs)
        raise ExecError(f"{_type_name(func)} object is not callable")

    def _call_native(self, name, fn, args, kwargs):
        try:
            return fn(self, *args, **kwargs)
        except (LangError, _Return):
            raise
        except RecursionError:
            raise ExecError("maximum recursion depth exceeded") from None
        except (TypeError, ValueError, ZeroDivisionError, OverflowError, KeyError, IndexError) as err:
            raise ExecError(f"{name}: {err}") from None

    def _call_user(self, func: UserFunction, args, kwargs):
        params = func.params
        if len(args) > len(params):
            raise ExecError(f"{func.name}() takes {len(params)} positional arguments but {len(args)} were given")
        bound = dict(zip(params, args))
        for k, v in kwargs.items():
            if k not in params:
                raise ExecError(f"{func.name}() got an unexpected keyword argument {k!r}")
            if k in bound:
                raise ExecError(f"{func.name}() got multiple values for argument {k!r}")
            bound[k] = v
        missing = [p for p in params if p not in bound]
        if missing:
            raise ExecError(f"{func.name}() missing required arguments: {', '.join(missing)}")
        if self.depth >= MAX_CALL_DEPTH:
            raise ExecError("maximum recursion depth exceeded")
        self.env.calls[func.name] += 1
        self.depth += 1
        try:
            self.exec_block(func.body, Scope(bound, parent=func.closure))
        except _Return as r:
            return r.value
        finally:
            self.depth -= 1
        return None

    # -- nested programs ----------------------------------------------------

    def eval_embedded(self, program_text: str, bindings: Optional[Mapping] = None) -> Scope:
        """Run ``program_text`` in a child scope of the globals seeded with
        ``bindings``. Returns that scope; the caller's scope is untouched."""
        if not isinstance(program_text, str):
            raise ExecError(f"embedded program must be a string, got {_type_name(program_text)}")
        if bindings is not None and not isinstance(bindings, dict):
            raise ExecError(f"embedded variables must be a dict, got {_type_name(bindings)}")
        try:
            module = parse(program_text)
        except ParseError as err:
            raise ExecError(f"parse error in embedded program: {err}") from None
        child = Scope(bindings or {}, parent=self.env.globals)
        try:
            self.exec_block(module.body, child)
        except _Return:
            raise ExecError("'return' outside function") from None
        return child


def execute(module: n.Module, env: Env) -> ExecutionOutcome:
    """Execute a parsed program. Never raises for program faults; the
    outcome's status records them and the domain state stays inspectable."""
    interp = Interpreter(env)
    status, error = OK, ""
    try:
        interp.run_module(module)
    except BudgetExceeded as err:
        status, error = BUDGET_EXCEEDED, str(err)
    except ExecError as err:
        status, error = RUNTIME_ERROR, str(err)
    except RecursionError:
        status, error = RUNTIME_ERROR, "maximum recursion depth exceeded"
    found, answer = env.globals.lookup("answer")
    return ExecutionOutcome(
        status=status,
        answer=answer if found else None,
        effects=env.state,
        stdout="".join(env.stdout),
        error=error,
        steps=interp.steps,
        calls=dict(env.calls),
    )


def run(source: str, env: Env) -> ExecutionOutcome:
    """Parse and execute ``source``; parse failures become a parse-error outcome."""
    try:
        module = parse(source)
    except ParseError as err:
        return ExecutionOutcome(status=PARSE_ERROR, effects=env.state, error=str(err))
    return execute(module, env)


def eval_embedded(program_text: str, env: Env, bindings: Optional[Mapping] = None) -> ExecutionOutcome:
    """Standalone form of the nested-program primitive: executes
    ``program_text`` in a child scope of ``env``'s globals."""
    interp = Interpreter(env)
    status, error, answer, variables = OK, "", None, {}
    try:
        child = interp.eval_embedded(program_text, bindings)
        variables = dict(child.vars)
        answer = variables.get("answer")
    except BudgetExceeded as err:
        status, error = BUDGET_EXCEEDED, str(err)
    except ExecError as err:
        status, error = RUNTIME_ERROR, str(err)
    return ExecutionOutcome(status=status, answer=answer, effects=env.state,
                            stdout="".join(env.stdout), error=error, steps=interp.steps,
                            calls=dict(env.calls), variables=variables)
