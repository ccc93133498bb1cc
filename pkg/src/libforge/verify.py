"""Execution-based verification of candidate programs.

A candidate is linked with the helper definitions it (transitively) calls,
run from a fresh domain state, and its result compared with the gold
result of the original program.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .domains import compare_results
from .lang import DEFAULT_BUDGET, ExecutionOutcome, ParseError, free_names, parse
from .lang.interpreter import PARSE_ERROR
from .lang.nodes import FunctionDef, Module

MISMATCH = "The result does not match the result of the original program."


@dataclass
class Verdict:
    passed: bool
    feedback: str = ""
    helpers: list = field(default_factory=list)
    missing: list = field(default_factory=list)
    outcome: ExecutionOutcome | None = None


@lru_cache(maxsize=4096)
def _parse_def(source: str) -> FunctionDef:
    module = parse(source)
    return next(s for s in module.body if isinstance(s, FunctionDef))


def _parse_program(source: str) -> Module:
    return parse(source)


def resolve_helpers(module: Module, definitions: dict, primitives) -> tuple[list, list]:
    """Helper names reachable from ``module`` (sorted) and names nobody defines."""
    found, missing = set(), set()
    todo = sorted(free_names(module, primitives))
    while todo:
        name = todo.pop()
        if name in found or name in missing:
            continue
        if name not in definitions:
            missing.add(name)
            continue
        found.add(name)
        func = _parse_def(definitions[name])
        todo.extend(free_names(Module([func]), primitives))
    return sorted(found), sorted(missing)


def link(module: Module, names, definitions: dict) -> Module:
    """``module`` with the named helper definitions placed in front of it."""
    return Module([_parse_def(definitions[n]) for n in names] + list(module.body), source=module.source)


def run_linked(program, definitions: dict, domain, example=None, budget: int = DEFAULT_BUDGET):
    """Execute ``program`` with helpers resolved from ``definitions``.

    Returns (outcome, helpers, missing); ``outcome`` is None when a helper is
    missing and the program was therefore not run.
    """
    if isinstance(program, str):
        try:
            program = _parse_program(program)
        except ParseError as err:
            return ExecutionOutcome(PARSE_ERROR, error=str(err)), [], []
    primitives = domain.primitive_names
    helpers, missing = resolve_helpers(program, definitions, primitives)
    if missing:
        return None, helpers, missing
    return domain.run(link(program, helpers, definitions), example, budget=budget), helpers, missing


def verify(candidate: str, gold, definitions: dict, domain, example=None,
           budget: int = DEFAULT_BUDGET) -> Verdict:
    outcome, helpers, missing = run_linked(candidate, definitions, domain, example, budget)
    if missing:
        return Verdict(False, "undefined function: " + ", ".join(missing), helpers, missing)
    if outcome.status == PARSE_ERROR:
        return Verdict(False, f"parse error: {outcome.error}", helpers, outcome=outcome)
    if not outcome.ok:
        return Verdict(False, domain.feedback(outcome), helpers, outcome=outcome)
    if gold is None or not compare_results(domain, gold, domain.result(outcome)):
        fb = domain.feedback(outcome)
        return Verdict(False, f"{fb}\n{MISMATCH}" if fb else MISMATCH, helpers, outcome=outcome)
    return Verdict(True, "", helpers, outcome=outcome)
