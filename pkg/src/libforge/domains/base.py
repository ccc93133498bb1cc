"""Shared domain plumbing: results, comparison dispatch, program execution."""
from __future__ import annotations

import datetime
from dataclasses import dataclass
from typing import Any, Optional

from ..lang import DEFAULT_BUDGET, Env, ExecutionOutcome, Registry, execute, parse
from ..lang.errors import ParseError
from ..lang.interpreter import PARSE_ERROR

STROKES = "strokes"
ANSWER = "answer"
CRAFTING = "crafting"


class DomainError(Exception):
    pass


@dataclass(frozen=True)
class DomainResult:
    kind: str
    payload: Any


def render_value(value) -> str:
    """Canonical string form used to compare program answers."""
    if isinstance(value, datetime.date):
        return value.isoformat()
    if isinstance(value, list):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted((render_value(k), render_value(v)) for k, v in value.items())
        return "{" + ", ".join(f"{k}: {v}" for k, v in items) + "}"
    return str(value)


class Domain:
    """One executable program domain.

    Subclasses supply the primitive registry, a fresh state per execution,
    the result extracted from a finished execution, and the equivalence
    predicate over results.
    """

    name: str = ""
    result_kind: str = ""
    description: str = ""
    agent_instruction: str = ""
    add_comments_default: bool = False

    def registry(self) -> Registry:
        raise NotImplementedError

    def initial_state(self, example=None):
        raise NotImplementedError

    def result(self, outcome: ExecutionOutcome) -> DomainResult:
        raise NotImplementedError

    def compare(self, a: DomainResult, b: DomainResult) -> bool:
        raise NotImplementedError

    def gold_result(self, example) -> Optional[DomainResult]:
        """Result the example's gold program produces, or None if unavailable."""
        if not getattr(example, "program", None):
            return None
        outcome = self.run(example.program, example)
        if not outcome.ok:
            return None
        return self.result(outcome)

    def feedback(self, outcome: ExecutionOutcome) -> str:
        """Environment feedback text shown to the refactoring model on failure."""
        parts = []
        if outcome.stdout:
            parts.append(f"Output:\n{outcome.stdout.rstrip()}")
        if outcome.answer is not None:
            parts.append(f"answer = {render_value(outcome.answer)}")
        if outcome.error:
            parts.append(f"Error: {outcome.error}")
        return "\n".join(parts)

    @property
    def primitive_names(self) -> frozenset:
        return self.registry().names()

    def run(self, program, example=None, budget: int = DEFAULT_BUDGET) -> ExecutionOutcome:
        """Execute source text or a parsed module from a fresh state."""
        state = self.initial_state(example)
        if isinstance(program, str):
            try:
                program = parse(program)
            except ParseError as err:
                return ExecutionOutcome(status=PARSE_ERROR, effects=state, error=str(err))
        env = Env(registry=self.registry(), state=state, budget=budget)
        return execute(program, env)


def compare_results(domain: Domain, a: DomainResult, b: DomainResult) -> bool:
    if a.kind != b.kind:
        raise DomainError(f"result kind mismatch: {a.kind} vs {b.kind}")
    if a.kind != domain.result_kind:
        raise DomainError(f"{domain.name} cannot compare {a.kind} results")
    return domain.compare(a, b)
