"""The helper library (Code Bank) and usage demonstrations (Demo Bank).

A helper's score is ``passes - sum(1 / n_p for each failing program)``,
where ``n_p`` is the number of helpers the failing program used, so blame
for a failure is shared among the helpers involved.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .lang import ParseError, first_comment, parse, to_source
from .lang.nodes import Comment, FunctionDef

SCHEMA_VERSION = 1
CODEBANK_FILE = "codebank.json"
DEMOBANK_FILE = "demobank.json"
DEFAULT_THETA = 0.0
DEFAULT_MIN_USES = 3


class BankError(ValueError):
    pass


@dataclass(frozen=True)
class Record:
    program_id: str
    passed: bool
    n_p: int


def parse_helper(source: str) -> FunctionDef:
    try:
        module = parse(source)
    except ParseError as err:
        raise BankError(f"helper does not parse: {err}") from None
    body = [s for s in module.body if not isinstance(s, Comment)]
    if len(body) != 1 or not isinstance(body[0], FunctionDef):
        raise BankError("helper source must contain exactly one function definition")
    return body[0]


@dataclass
class HelperFunction:
    name: str
    source: str
    description: str = ""
    created_at: int = 0
    records: list = field(default_factory=list)

    @classmethod
    def from_source(cls, source: str, created_at: int = 0) -> "HelperFunction":
        func = parse_helper(source)
        return cls(func.name, to_source(func), first_comment(func), created_at)

    @property
    def params(self) -> list:
        return parse_helper(self.source).params

    @property
    def passes(self) -> int:
        return sum(1 for r in self.records if r.passed)

    @property
    def fails(self) -> int:
        return sum(1 for r in self.records if not r.passed)

    def score(self) -> float:
        return score(self)


def score(func: HelperFunction) -> float:
    total = 0.0
    for r in func.records:
        if r.n_p <= 0:
            raise BankError(f"{func.name}: record for {r.program_id} has n_p = {r.n_p}")
        total += 1.0 if r.passed else -1.0 / r.n_p
    return total


@dataclass
class Demo:
    id: str
    example_id: str
    query: str
    program: str
    success: bool
    helpers_used: list = field(default_factory=list)
    eligible: bool = True


@dataclass
class CodeBank:
    functions: dict = field(default_factory=dict)   # name -> HelperFunction
    tombstones: dict = field(default_factory=dict)  # name -> {"score", "reason", "source"}
    rejected: list = field(default_factory=list)    # analytics for helpers that never got in

    def __contains__(self, name) -> bool:
        return name in self.functions

    def __len__(self) -> int:
        return len(self.functions)

    def sources(self, names=None) -> list[str]:
        names = sorted(self.functions) if names is None else names
        return [self.functions[n].source for n in names]

    def definitions(self) -> dict:
        return {name: f.source for name, f in self.functions.items()}

    def blocked(self, name: str, source: str) -> bool:
        """Tombstoned with this very body: re-adding it requires a change."""
        t = self.tombstones.get(name)
        return t is not None and t["source"] == source

    def add(self, func: HelperFunction) -> None:
        if self.blocked(func.name, func.source):
            raise BankError(f"{func.name} was pruned with this exact body")
        self.tombstones.pop(func.name, None)
        self.functions[func.name] = func


@dataclass
class DemoBank:
    demos: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.demos)

    def get(self, demo_id: str) -> Demo | None:
        for d in self.demos:
            if d.id == demo_id:
                return d
        return None

    def using(self, name: str) -> list:
        return [d for d in self.demos if name in d.helpers_used]

    def eligible(self) -> list:
        return [d for d in self.demos if d.success and d.eligible]


def record_result(bank: CodeBank, program_id: str, helpers_used, passed: bool) -> None:
    """One record per helper, sharing ``n_p = len(helpers_used)``.

    Re-submitting the same (program, helper) pair replaces the earlier record.
    """
    names = list(dict.fromkeys(helpers_used))
    unknown = [n for n in names if n not in bank.functions]
    if unknown:
        raise BankError("unknown helper(s): " + ", ".join(unknown))
    rec = Record(program_id, bool(passed), len(names))
    for name in names:
        records = bank.functions[name].records
        for i, old in enumerate(records):
            if old.program_id == program_id:
                records[i] = rec
                break
        else:
            records.append(rec)


def drop_records(bank: CodeBank, program_id: str) -> None:
    for f in bank.functions.values():
        f.records = [r for r in f.records if r.program_id != program_id]


def prune(bank: CodeBank, demos: DemoBank | None = None, theta: float = DEFAULT_THETA,
          min_uses: int = DEFAULT_MIN_USES) -> list[str]:
    """Tombstone well-used helpers scoring below ``theta``; returns their names.

    Demos calling a pruned helper stop being eligible as demonstrations.
    """
    pruned = []
    for name in sorted(bank.functions):
        f = bank.functions[name]
        if len(f.records) >= min_uses:
            s = score(f)
            if s < theta:
                pruned.append(name)
                bank.tombstones[name] = {"score": s, "reason": f"score {s:.4f} < {theta}", "source": f.source}
    for name in pruned:
        del bank.functions[name]
    if demos is not None and pruned:
        gone = set(pruned)
        for d in demos.demos:
            if gone & set(d.helpers_used):
                d.eligible = False
    return pruned


# -- persistence ---------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def codebank_to_json(bank: CodeBank) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "functions": [
            {"name": f.name, "source": f.source, "description": f.description, "created_at": f.created_at,
             "records": [[r.program_id, r.passed, r.n_p] for r in f.records]}
            for f in sorted(bank.functions.values(), key=lambda f: f.name)
        ],
        "tombstones": bank.tombstones,
        "rejected": bank.rejected,
    }


def demobank_to_json(demos: DemoBank) -> dict:
    return {"schema_version": SCHEMA_VERSION, "demos": [asdict(d) for d in demos.demos]}


def save(bank: CodeBank, demos: DemoBank, directory) -> tuple[Path, Path]:
    d = Path(directory)
    cb, db = d / CODEBANK_FILE, d / DEMOBANK_FILE
    _atomic_write(cb, _dump(codebank_to_json(bank)))
    _atomic_write(db, _dump(demobank_to_json(demos)))
    return cb, db


def _read(path: Path) -> dict:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise BankError(f"{path}: no such file") from None
    except json.JSONDecodeError as err:
        raise BankError(f"{path}: malformed bank file ({err.msg} at line {err.lineno})") from None
    if not isinstance(data, dict):
        raise BankError(f"{path}: malformed bank file (top level is not an object)")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise BankError(f"{path}: schema version {version!r} is not supported (expected {SCHEMA_VERSION})")
    return data


def codebank_from_json(data: dict, where="codebank") -> CodeBank:
    try:
        bank = CodeBank(tombstones=dict(data.get("tombstones", {})), rejected=list(data.get("rejected", [])))
        for f in data["functions"]:
            bank.functions[f["name"]] = HelperFunction(
                f["name"], f["source"], f["description"], f["created_at"],
                [Record(pid, bool(ok), int(n_p)) for pid, ok, n_p in f["records"]])
    except (KeyError, TypeError, ValueError) as err:
        raise BankError(f"{where}: malformed bank file ({err})") from None
    return bank


def load(directory) -> tuple[CodeBank, DemoBank]:
    d = Path(directory)
    bank = codebank_from_json(_read(d / CODEBANK_FILE), str(d / CODEBANK_FILE))
    data = _read(d / DEMOBANK_FILE)
    try:
        demos = DemoBank([Demo(**x) for x in data["demos"]])
    except (KeyError, TypeError) as err:
        raise BankError(f"{d / DEMOBANK_FILE}: malformed bank file ({err})") from None
    return bank, demos
