"""Training/test examples and their JSON-lines file format."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema

EXAMPLE_SCHEMA = {
    "type": "object",
    "required": ["id", "query", "program", "split"],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "query": {"type": "string", "minLength": 1},
        "program": {"type": "string"},
        "split": {"type": "string", "enum": ["train", "dev", "test"]},
        "comments": {"type": ["string", "null"]},
        "metadata": {"type": "object"},
    },
}

_validator = jsonschema.Draft7Validator(EXAMPLE_SCHEMA)


class DatasetError(ValueError):
    pass


@dataclass
class Example:
    id: str
    query: str
    program: str
    split: str = "train"
    comments: str | None = None
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        if d["comments"] is None:
            del d["comments"]
        if not d["metadata"]:
            del d["metadata"]
        return d


def parse_examples(lines) -> list[Example]:
    examples, problems = [], []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            problems.append(f"line {lineno}: invalid JSON ({err.msg})")
            continue
        errs = sorted(_validator.iter_errors(obj), key=lambda e: list(e.path))
        if errs:
            problems.append(f"line {lineno}: " + "; ".join(e.message for e in errs))
            continue
        examples.append(Example(**{k: obj[k] for k in EXAMPLE_SCHEMA["properties"] if k in obj}))
    seen, dupes = set(), []
    for ex in examples:
        if ex.id in seen and ex.id not in dupes:
            dupes.append(ex.id)
        seen.add(ex.id)
    if dupes:
        problems.append("duplicate ids: " + ", ".join(dupes))
    if problems:
        raise DatasetError("invalid dataset:\n  " + "\n  ".join(problems))
    return examples


def load_examples(path, split: str | None = None) -> list[Example]:
    text = Path(path).read_text(encoding="utf-8")
    examples = parse_examples(text.splitlines())
    if split is not None:
        examples = [e for e in examples if e.split == split]
    return examples


def write_examples(path, examples) -> None:
    lines = [json.dumps(e.to_json(), sort_keys=True) for e in examples]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
