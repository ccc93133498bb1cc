"""The training loop: refactor each batch, verify, retry, commit, and
periodically edit and prune the Code Bank."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import codebank as cb
from .codebank import CodeBank, Demo, DemoBank, HelperFunction
from .domains import get_domain
from .lang import BUILTIN_NAMES, DEFAULT_BUDGET
from .llm import (
    Case, Failure, GatewayError, build_edit_prompt, build_migration_prompt, build_refactor_prompt,
    build_retry_prompt, parse_edit_response, parse_program_response, parse_refactor_response,
)
from .llm.backends import DEFAULT_MODEL
from .verify import Verdict, verify

log = logging.getLogger(__name__)

STATE_FILE = "train_state.json"
REPORT_FILE = "train_report.json"

PRESETS = {
    "logo": {"batch_size": 5, "rounds": 3, "add_comments": True, "filter_before_testing": True},
    "date": {"batch_size": 3, "rounds": 1, "add_comments": False, "filter_before_testing": True},
    "textcraft": {"batch_size": 4, "rounds": 1, "add_comments": False, "filter_before_testing": False},
}


class ConfigError(ValueError):
    pass


class TrainAborted(RuntimeError):
    pass


@dataclass
class TrainConfig:
    domain: str = "logo"
    batch_size: int = 5
    edit_every: int = 5
    prune_every: int = 5
    rounds: int = 1
    theta: float = cb.DEFAULT_THETA
    min_uses: int = cb.DEFAULT_MIN_USES
    add_comments: bool = False
    filter_before_testing: bool = False
    retry: bool = True
    edit: bool = True
    prune: bool = True
    curriculum: bool = True
    budget: int = DEFAULT_BUDGET
    seed: int = 0
    embedding: str = "local"
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_tokens: int = 1024

    @classmethod
    def for_domain(cls, domain: str, **overrides) -> "TrainConfig":
        if domain not in PRESETS:
            raise ConfigError(f"unknown domain {domain!r}")
        return cls(domain=domain, **{**PRESETS[domain], **overrides}).validate()

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError("unknown config keys: " + ", ".join(unknown))
        return cls(**data).validate()

    def validate(self) -> "TrainConfig":
        for name in ("batch_size", "edit_every", "prune_every", "rounds", "min_uses", "budget", "max_tokens"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        return self

    def request_kw(self) -> dict:
        return {"model": self.model, "temperature": self.temperature, "max_tokens": self.max_tokens}


@dataclass
class BatchReport:
    epoch: int
    batch: int
    examples: list
    proposed: int = 0
    verified: int = 0
    failed: int = 0
    retried: int = 0
    recovered: int = 0
    helpers_added: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)


@dataclass
class TrainReport:
    batches: list = field(default_factory=list)
    events: list = field(default_factory=list)
    functions: int = 0
    demos: int = 0
    successful_demos: int = 0
    stages: dict = field(default_factory=dict)  # stage name -> enabled

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "TrainReport":
        return cls(batches=[BatchReport(**b) for b in d["batches"]], events=d["events"],
                   functions=d["functions"], demos=d["demos"], successful_demos=d["successful_demos"],
                   stages=d.get("stages", {}))

    def event_kinds(self) -> list:
        return [(e["epoch"], e["batch"], e["kind"]) for e in self.events]

    def summary(self) -> str:
        proposed = sum(b.proposed for b in self.batches)
        verified = sum(b.verified for b in self.batches)
        off = [k for k, on in sorted(self.stages.items()) if not on]
        lines = [
            f"stages skipped: {', '.join(off) if off else 'none'}",
            f"batches: {len(self.batches)}  programs: {proposed}  verified: {verified}  "
            f"recovered by retry: {sum(b.recovered for b in self.batches)}",
            f"code bank: {self.functions} helpers  demo bank: {self.demos} demos "
            f"({self.successful_demos} successful)",
        ]
        for e in self.events:
            lines.append(f"  epoch {e['epoch']} batch {e['batch']}: {e['kind']} {json.dumps(e['details'], sort_keys=True)}")
        return "\n".join(lines)


@dataclass
class Candidate:
    example: object
    program: str
    verdict: Verdict
    definitions: dict
    retried: bool = False
    recovered: bool = False


class Trainer:
    def __init__(self, config: TrainConfig, gateway, bank: CodeBank | None = None,
                 demos: DemoBank | None = None, out_dir=None):
        self.config = config.validate()
        self.domain = get_domain(config.domain)
        self.gateway = gateway
        self.bank = bank or CodeBank()
        self.demos = demos or DemoBank()
        self.report = TrainReport()
        self.out_dir = Path(out_dir) if out_dir else None
        self.step = 0           # global 1-based batch counter
        self.done: set = set()  # (epoch, batch position) pairs already processed
        self._gold: dict = {}
        self._examples: dict = {}

    # -- helpers ------------------------------------------------------------

    def gold(self, example):
        if example.id not in self._gold:
            self._gold[example.id] = self.domain.gold_result(example)
        return self._gold[example.id]

    def _verify(self, program: str, example, definitions: dict) -> Verdict:
        gold = self.gold(example)
        if gold is None:
            return Verdict(False, "the original program has no usable result")
        return verify(program, gold, definitions, self.domain, example, self.config.budget)

    def _complete(self, req) -> str:
        return self.gateway.complete(req)

    def _new_helpers(self, sources, diagnostics) -> dict:
        reserved = self.domain.primitive_names | BUILTIN_NAMES
        out = {}
        for src in sources:
            try:
                h = HelperFunction.from_source(src)
            except cb.BankError as err:
                diagnostics.append(f"helper rejected: {err}")
                continue
            if h.name in reserved:
                diagnostics.append(f"helper {h.name} rejected: shadows a primitive or builtin")
                continue
            if self.bank.blocked(h.name, h.source):
                diagnostics.append(f"helper {h.name} rejected: identical to a pruned helper")
                continue
            out[h.name] = h.source
        return out

    # -- refactor and verify ---------------------------------------------------

    def refactor_batch(self, batch, rep: BatchReport) -> list[Candidate]:
        req = build_refactor_prompt(batch, self.bank.sources(), self.domain, **self.config.request_kw())
        proposal = parse_refactor_response(self._complete(req), len(batch))
        rep.diagnostics += proposal.diagnostics
        new = self._new_helpers(proposal.helpers, rep.diagnostics)
        definitions = {**self.bank.definitions(), **new}
        out = []
        for i, ex in enumerate(batch, 1):
            prog = proposal.program(i)
            if prog is None:
                out.append(Candidate(ex, "", Verdict(False, f"no program was returned for QUERY {i}"), definitions))
                continue
            out.append(Candidate(ex, prog.source, self._verify(prog.source, ex, definitions), definitions))
        return out

    # -- retry failures ---------------------------------------------------------

    def retry(self, candidates: list[Candidate], rep: BatchReport) -> None:
        failed = [(i, c) for i, c in enumerate(candidates, 1) if not c.verdict.passed]
        if not failed:
            return
        items, feedback = [], []
        for i, c in failed:
            bank_defs = self.bank.definitions()
            own = tuple(c.definitions[n] for n in c.verdict.helpers
                        if n in c.definitions and bank_defs.get(n) != c.definitions[n])
            items.append(Failure(i, c.example.query, c.example.program, c.program or "(no program)", own))
            feedback.append(c.verdict.feedback)
        req = build_retry_prompt(items, feedback, self.bank.sources(), self.domain, **self.config.request_kw())
        proposal = parse_refactor_response(self._complete(req), len(candidates))
        rep.diagnostics += [f"retry: {d}" for d in proposal.diagnostics]
        rep.retried += len(failed)
        for i, c in failed:
            c.retried = True
            prog = proposal.program(i)
            if prog is None:
                continue
            new = self._new_helpers(proposal.helpers, rep.diagnostics)
            definitions = {**c.definitions, **new}
            verdict = self._verify(prog.source, c.example, definitions)
            if verdict.passed:
                c.program, c.verdict, c.definitions, c.recovered = prog.source, verdict, definitions, True
                rep.recovered += 1

    # -- commit ---------------------------------------------------------------

    def commit(self, candidates: list[Candidate], epoch: int, rep: BatchReport) -> None:
        changed = set()
        for c in candidates:
            if not c.verdict.passed:
                continue
            for name in c.verdict.helpers:
                src = c.definitions[name]
                live = self.bank.functions.get(name)
                if live is None:
                    revived = name in self.bank.tombstones
                    self.bank.add(HelperFunction.from_source(src, created_at=self.step))
                    rep.helpers_added.append(name)
                    if revived or self.demos.using(name):
                        changed.add(name)
                elif live.source != src:
                    rep.diagnostics.append(f"helper {name}: body replaced by a verified proposal")
                    replacement = HelperFunction.from_source(src, created_at=live.created_at)
                    replacement.records = live.records
                    self.bank.functions[name] = replacement
                    changed.add(name)
        for c in candidates:
            demo_id = f"{c.example.id}:{epoch}"
            used = [n for n in c.verdict.helpers
                    if n in self.bank.functions and self.bank.functions[n].source == c.definitions.get(n)]
            for n in c.verdict.helpers:
                if n not in used:
                    self.bank.rejected.append({"program_id": demo_id, "helper": n, "batch": self.step,
                                               "source": c.definitions.get(n, "")})
            old = self.demos.get(demo_id)
            if old is not None:  # resumed mid-batch: replace, never duplicate
                cb.drop_records(self.bank, demo_id)
                self.demos.demos.remove(old)
            self.demos.demos.append(Demo(demo_id, c.example.id, c.example.query, c.program,
                                         c.verdict.passed, used))
            if used:
                cb.record_result(self.bank, demo_id, used, c.verdict.passed)
        for name in sorted(changed):
            for demo in self.demos.using(name):
                self.reverify(demo)

    def reverify(self, demo: Demo) -> bool:
        """Re-run a demo against the live bank and refresh its flag and records."""
        if not demo.program:
            return False
        example = self._examples.get(demo.example_id)
        if example is None:
            return demo.success
        verdict = self._verify(demo.program, example, self.bank.definitions())
        cb.drop_records(self.bank, demo.id)
        demo.success = verdict.passed
        demo.helpers_used = [n for n in verdict.helpers if n in self.bank.functions]
        demo.eligible = not any(n in self.bank.tombstones for n in demo.helpers_used + verdict.missing)
        if demo.helpers_used:
            cb.record_result(self.bank, demo.id, demo.helpers_used, demo.success)
        return demo.success

    # -- edit and prune ---------------------------------------------------------

    def edit_codebank(self) -> list:
        details = []
        for name in sorted(self.bank.functions):
            f = self.bank.functions.get(name)
            if f is None or f.fails == 0:
                continue
            details.append(self._edit_one(f))
        return details

    def _edit_one(self, f: HelperFunction) -> dict:
        name = f.name
        tests = [d for d in self.demos.using(name) if d.program and d.example_id in self._examples]
        defs = self.bank.definitions()
        before = {d.id: self._verify(d.program, self._examples[d.example_id], defs) for d in tests}
        n_before = sum(v.passed for v in before.values())
        passing = [Case(d.query, d.program) for d in tests if before[d.id].passed]
        failing = [Case(d.query, d.program, before[d.id].feedback) for d in tests if not before[d.id].passed]
        info = {"function": name, "adopted": False, "before": n_before, "after": n_before, "migrated": False}
        if not failing:
            info["reason"] = "no failing tests"
            return info
        others = [s for n, s in sorted(defs.items()) if n != name]
        req = build_edit_prompt(name, f.source, f.passes, f.fails, passing, failing, others, self.domain,
                                **self.config.request_kw())
        new_src = parse_edit_response(self._complete(req), name)
        if new_src is None:
            info["reason"] = "edited function did not parse"
            return info
        try:
            new = HelperFunction.from_source(new_src, created_at=f.created_at)
        except cb.BankError as err:
            info["reason"] = str(err)
            return info
        if new.source == f.source:
            info["reason"] = "unchanged"
            return info
        programs = {d.id: d.program for d in tests}
        if new.params != f.params:
            info["migrated"] = True
            for d in tests:
                mreq = build_migration_prompt(f.source, new.source, Case(d.query, d.program), self.domain,
                                              **self.config.request_kw())
                migrated, _ = parse_program_response(self._complete(mreq), "NEW PROGRAM:")
                if migrated is not None:
                    programs[d.id] = migrated
        new_defs = {**defs, name: new.source}
        after = {d.id: self._verify(programs[d.id], self._examples[d.example_id], new_defs) for d in tests}
        n_after = sum(v.passed for v in after.values())
        info["after"] = n_after
        if n_after <= n_before:
            info["reason"] = "no strict improvement"
            return info
        new.records = f.records
        self.bank.functions[name] = new
        for d in tests:
            d.program = programs[d.id]
        for d in self.demos.using(name):
            self.reverify(d)
        info["adopted"] = True
        return info

    def prune_stage(self) -> list:
        scores = {n: f.score() for n, f in self.bank.functions.items()}
        pruned = cb.prune(self.bank, self.demos, self.config.theta, self.config.min_uses)
        return [{"function": n, "score": scores[n]} for n in pruned]

    # -- loop -------------------------------------------------------------------

    def _event(self, epoch, kind, details):
        self.report.events.append({"epoch": epoch, "batch": self.step, "kind": kind, "details": details})

    def process_batch(self, batch, epoch: int) -> BatchReport:
        rep = BatchReport(epoch, self.step, [ex.id for ex in batch])
        candidates = self.refactor_batch(batch, rep)
        if self.config.retry:
            self.retry(candidates, rep)
        self.commit(candidates, epoch, rep)
        rep.proposed = len(candidates)
        rep.verified = sum(c.verdict.passed for c in candidates)
        rep.failed = rep.proposed - rep.verified
        return rep

    def train(self, batches: list) -> tuple[CodeBank, DemoBank, TrainReport]:
        for batch in batches:
            for ex in batch:
                self._examples[ex.id] = ex
        cfg = self.config
        try:
            for epoch in range(1, cfg.rounds + 1):
                for pos, batch in enumerate(batches):
                    if (epoch, pos) in self.done:
                        continue
                    self.step += 1
                    rep = self.process_batch(batch, epoch)
                    self.report.batches.append(rep)
                    log.info("epoch %d batch %d: %d/%d verified", epoch, self.step, rep.verified, rep.proposed)
                    if cfg.edit and self.step % cfg.edit_every == 0:
                        self._event(epoch, "edit", self.edit_codebank())
                    if cfg.prune and self.step % cfg.prune_every == 0:
                        self._event(epoch, "prune", self.prune_stage())
                    self.done.add((epoch, pos))
                    self.checkpoint(batches)
            if cfg.prune and cfg.filter_before_testing and ("filter" not in [e["kind"] for e in self.report.events]):
                self._event(cfg.rounds, "filter", self.prune_stage())
        except GatewayError as err:
            # the checkpoint on disk is the last completed step; the
            # interrupted one is redone from scratch on resume
            raise TrainAborted(f"training aborted after batch {self.step}: {err}") from err
        self._finish()
        self.checkpoint(batches, final=True)
        return self.bank, self.demos, self.report

    def _finish(self):
        cfg = self.config
        self.report.stages = {"retry": cfg.retry, "edit": cfg.edit, "prune": cfg.prune,
                              "curriculum": cfg.curriculum}
        self.report.functions = len(self.bank)
        self.report.demos = len(self.demos)
        self.report.successful_demos = sum(d.success for d in self.demos.demos)

    # -- persistence --------------------------------------------------------------

    def checkpoint(self, batches, final: bool = False) -> None:
        if self.out_dir is None:
            return
        self._finish()
        cb.save(self.bank, self.demos, self.out_dir)
        state = {
            "schema_version": cb.SCHEMA_VERSION,
            "config": asdict(self.config),
            "batches": [[ex.id for ex in b] for b in batches],
            "step": self.step,
            "done": sorted([e, p] for e, p in self.done),
            "finished": final,
            "report": self.report.to_json(),
        }
        (self.out_dir / STATE_FILE).write_text(json.dumps(state, sort_keys=True, indent=2) + "\n")
        if final:
            (self.out_dir / REPORT_FILE).write_text(json.dumps(self.report.to_json(), sort_keys=True, indent=2) + "\n")

    @classmethod
    def resume(cls, out_dir, gateway, batches) -> "Trainer":
        out = Path(out_dir)
        try:
            state = json.loads((out / STATE_FILE).read_text())
        except (FileNotFoundError, json.JSONDecodeError) as err:
            raise cb.BankError(f"cannot resume from {out}: {err}") from None
        if state["batches"] != [[ex.id for ex in b] for b in batches]:
            raise ConfigError("the batch plan differs from the one being resumed")
        bank, demos = cb.load(out)
        t = cls(TrainConfig.from_dict(state["config"]), gateway, bank, demos, out)
        t.step = state["step"]
        t.done = {tuple(x) for x in state["done"]}
        t.report = TrainReport.from_json(state["report"])
        return t


def train(batches, config: TrainConfig, gateway, out_dir=None):
    return Trainer(config, gateway, out_dir=out_dir).train(batches)
