"""Test-time synthesis with retrieved helpers and mixed demonstrations."""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field

from .domains import compare_results, get_domain
from .lang import DEFAULT_BUDGET
from .llm import MAX_AGENT_HELPERS, Case, build_agent_prompt, parse_program_response
from .llm.backends import DEFAULT_MODEL
from .preprocess.embedding import embed_texts
from .retrieval import DEMO, HELPER, TRAIN
from .verify import run_linked

log = logging.getLogger(__name__)

LIBRARY = "library"
BASELINE = "baseline"


@dataclass
class AgentConfig:
    domain: str = "logo"
    icl_budget: int = 10
    ratio: float = 0.5
    max_helpers: int = MAX_AGENT_HELPERS
    mode: str = LIBRARY
    budget: int = DEFAULT_BUDGET
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_tokens: int = 1024

    def validate(self) -> "AgentConfig":
        if not 0 <= self.ratio <= 1:
            raise ValueError("ratio must lie in [0, 1]")
        if self.icl_budget < 0:
            raise ValueError("icl_budget must be >= 0")
        if not 0 <= self.max_helpers <= MAX_AGENT_HELPERS:
            raise ValueError(f"max_helpers must lie in [0, {MAX_AGENT_HELPERS}]")
        if self.mode not in (LIBRARY, BASELINE):
            raise ValueError(f"mode must be {LIBRARY} or {BASELINE}")
        return self

    def request_kw(self) -> dict:
        return {"model": self.model, "temperature": self.temperature, "max_tokens": self.max_tokens}


@dataclass
class PromptPlan:
    demos: list = field(default_factory=list)       # demo ids
    primitives: list = field(default_factory=list)  # training example ids
    helpers: list = field(default_factory=list)     # helper names


@dataclass
class EvalRecord:
    id: str
    program: str | None
    status: str
    correct: bool
    helper_calls: dict = field(default_factory=dict)
    diagnostic: str = ""
    plan: PromptPlan = field(default_factory=PromptPlan)

    @property
    def helpers_invoked(self) -> list:
        return sorted(self.helper_calls)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class EvalResult:
    records: list
    skipped: list

    @property
    def accuracy(self) -> float:
        return sum(r.correct for r in self.records) / len(self.records) if self.records else 0.0

    def histogram(self) -> Counter:
        return usage_histogram(self.records)

    def summary(self) -> dict:
        hist = self.histogram()
        return {"accuracy": self.accuracy, "n": len(self.records), "correct": sum(r.correct for r in self.records),
                "skipped": self.skipped, "usage": dict(sorted(hist.items(), key=lambda kv: (-kv[1], kv[0])))}


def usage_histogram(records) -> Counter:
    hist = Counter()
    for r in records:
        calls = r.helper_calls if hasattr(r, "helper_calls") else r["helper_calls"]
        hist.update(calls)
    return hist


def plan_prompt(query_vec, index, config: AgentConfig) -> PromptPlan:
    m = config.icl_budget
    plan = PromptPlan()
    if config.mode == LIBRARY:
        n_demo = math.floor(config.ratio * m)
        if n_demo and index.keys(DEMO):
            plan.demos = [k for k, _ in index.topk(query_vec, n_demo, DEMO)]
        if config.max_helpers and index.keys(HELPER):
            plan.helpers = [k for k, _ in index.topk(query_vec, config.max_helpers, HELPER)]
    n_prim = m - len(plan.demos)
    if n_prim:
        plan.primitives = [k for k, _ in index.topk(query_vec, n_prim, TRAIN)]
    return plan


class Agent:
    def __init__(self, bank, index, gateway, config: AgentConfig):
        self.config = config.validate()
        self.domain = get_domain(config.domain)
        self.bank = bank
        self.index = index
        self.gateway = gateway

    def prompt(self, query: str):
        vec = embed_texts([query], self.index.provider)[0]
        plan = plan_prompt(vec, self.index, self.config)
        helpers = [self.bank.functions[n].source for n in plan.helpers]
        demos = [Case(d.query, d.program) for d in (self.index.payload(DEMO, k) for k in plan.demos)]
        prims = [Case(e.query, e.program) for e in (self.index.payload(TRAIN, k) for k in plan.primitives)]
        req = build_agent_prompt(query, helpers, demos, prims, self.domain, **self.config.request_kw())
        return req, plan

    def synthesize(self, query: str):
        """Returns (program or None, plan, diagnostic)."""
        req, plan = self.prompt(query)
        program, diag = parse_program_response(self.gateway.complete(req), "Program:")
        return program, plan, diag

    def evaluate_one(self, example) -> EvalRecord | None:
        gold = self.domain.gold_result(example)
        if gold is None:
            return None
        program, plan, diag = self.synthesize(example.query)
        if program is None:
            return EvalRecord(example.id, None, "no-program", False, {}, diag, plan)
        definitions = self.bank.definitions() if self.bank is not None else {}
        outcome, helpers, missing = run_linked(program, definitions, self.domain, example, self.config.budget)
        if missing:
            return EvalRecord(example.id, program, "undefined-function", False, {},
                              "undefined function: " + ", ".join(missing), plan)
        calls = {k: v for k, v in sorted(outcome.calls.items()) if k in helpers}
        if not outcome.ok:
            return EvalRecord(example.id, program, outcome.status, False, calls, outcome.error, plan)
        correct = compare_results(self.domain, gold, self.domain.result(outcome))
        return EvalRecord(example.id, program, outcome.status, correct, calls, "" if correct else "wrong result", plan)

    def evaluate(self, testset) -> EvalResult:
        records, skipped = [], []
        for ex in testset:
            rec = self.evaluate_one(ex)
            if rec is None:
                log.warning("%s: no gold result, skipped", ex.id)
                skipped.append(ex.id)
            else:
                records.append(rec)
        return EvalResult(records, skipped)
