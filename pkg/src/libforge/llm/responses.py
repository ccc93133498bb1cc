"""Turning model text back into programs.

Model output routinely wraps code in markdown fences or surrounds it with
prose. The extractor strips fences, turns numbered thought lines into
comments and then keeps the longest run of lines that parses.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..lang import ParseError, parse, to_source
from ..lang.nodes import Comment, FunctionDef

_PROGRAM_MARK = re.compile(r"^[#*\s]*NEW PROGRAM\s*(\d+)\s*:?\**", re.MULTILINE)
_HELPERS_MARK = re.compile(r"^[#*\s]*NEW HELPERS\s*:?\**", re.MULTILINE)
_EDIT_MARK = re.compile(r"NEW PROGRAM\s*:")
_FENCE = re.compile(r"^\s*```")
_NUMBERED = re.compile(r"^\d+\.\s")
MAX_WINDOW_LINES = 400


@dataclass
class ProposedProgram:
    index: int
    source: str
    thoughts: str = ""


@dataclass
class RefactorProposal:
    programs: list = field(default_factory=list)  # ProposedProgram, ordered by index
    helpers: list = field(default_factory=list)   # helper function sources
    diagnostics: list = field(default_factory=list)

    def program(self, index: int) -> ProposedProgram | None:
        for p in self.programs:
            if p.index == index:
                return p
        return None


def _clean_lines(text: str) -> list[str]:
    lines = []
    for line in text.replace("\r\n", "\n").split("\n"):
        if _FENCE.match(line):
            continue
        if _NUMBERED.match(line):
            line = "# " + line
        lines.append(line.rstrip())
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()
    return lines


def _parses(text: str):
    try:
        return parse(text)
    except (ParseError, RecursionError):
        return None


def extract_code(text: str):
    """Return (source, module) for the longest parseable line window, or (None, None)."""
    lines = _clean_lines(text)
    if not lines:
        return None, None
    whole = "\n".join(lines) + "\n"
    module = _parses(whole)
    if module is not None:
        return whole, module
    if len(lines) > MAX_WINDOW_LINES:
        return None, None
    n = len(lines)
    for size in range(n - 1, 0, -1):
        for start in range(0, n - size + 1):
            window = lines[start:start + size]
            if not window[0].strip() or window[0][0] == " ":
                continue
            src = "\n".join(window) + "\n"
            module = _parses(src)
            if module is not None and any(not isinstance(s, Comment) for s in module.body):
                return src, module
    return None, None


def _leading_thoughts(module) -> str:
    out = []
    for stmt in module.body:
        if not isinstance(stmt, Comment):
            break
        out.append(stmt.text.strip())
    return "\n".join(out)


def _split_defs(text: str) -> list[str]:
    """Split raw helper text at top-level ``def`` lines (fallback when the whole block fails)."""
    chunks, cur = [], []
    for line in _clean_lines(text):
        if line.startswith("def ") and cur:
            chunks.append("\n".join(cur))
            cur = []
        cur.append(line)
    if cur:
        chunks.append("\n".join(cur))
    return chunks


def _helpers_from_text(text: str, diagnostics: list, where: str) -> list:
    module = _parses("\n".join(_clean_lines(text)) + "\n")
    if module is not None:
        chunks = [module]
    else:
        chunks = []
        for chunk in _split_defs(text):
            m = _parses(chunk + "\n")
            if m is None:
                first = chunk.strip().splitlines()[0] if chunk.strip() else ""
                diagnostics.append(f"{where}: dropped unparseable helper starting {first!r}")
                continue
            chunks.append(m)
    defs = []
    for m in chunks:
        for stmt in m.body:
            if isinstance(stmt, FunctionDef):
                defs.append(stmt)
            elif not isinstance(stmt, Comment):
                diagnostics.append(f"{where}: ignored top-level statement at line {stmt.line}")
    return defs


def parse_refactor_response(text: str, n_programs: int | None = None) -> RefactorProposal:
    """Split a refactoring answer on its NEW PROGRAM / NEW HELPERS markers.

    Never raises. Top-level helper definitions written inside a program
    section are lifted into the helper list.
    """
    proposal = RefactorProposal()
    try:
        _parse_into(text or "", n_programs, proposal)
    except Exception as err:  # parse totality: never propagate
        proposal.diagnostics.append(f"response could not be processed: {err}")
    return proposal


def _parse_into(text, n_programs, proposal):
    marks = [(m.start(), m.end(), int(m.group(1))) for m in _PROGRAM_MARK.finditer(text)]
    marks += [(m.start(), m.end(), None) for m in _HELPERS_MARK.finditer(text)]
    marks.sort()
    if not marks:
        proposal.diagnostics.append("no NEW PROGRAM or NEW HELPERS markers found")
        return
    helper_defs: dict[str, FunctionDef] = {}
    lifted: dict[str, FunctionDef] = {}
    for k, (start, end, index) in enumerate(marks):
        body = text[end:marks[k + 1][0] if k + 1 < len(marks) else len(text)]
        if index is None:
            for d in _helpers_from_text(body, proposal.diagnostics, "helpers"):
                helper_defs[d.name] = d
            continue
        if n_programs is not None and not 1 <= index <= n_programs:
            proposal.diagnostics.append(f"program {index}: index outside the batch")
            continue
        if proposal.program(index) is not None:
            proposal.diagnostics.append(f"program {index}: duplicate section ignored")
            continue
        src, module = extract_code(body)
        if module is None:
            proposal.diagnostics.append(f"program {index}: no parseable code")
            continue
        keep = []
        for stmt in module.body:
            if isinstance(stmt, FunctionDef):
                lifted[stmt.name] = stmt
            else:
                keep.append(stmt)
        if not any(not isinstance(s, Comment) for s in keep):
            proposal.diagnostics.append(f"program {index}: only definitions, no program body")
            continue
        module.body = keep
        proposal.programs.append(ProposedProgram(index, to_source(module), _leading_thoughts(module)))
    for name, d in lifted.items():
        if name not in helper_defs:
            proposal.diagnostics.append(f"helper {name}: lifted out of a program section")
            helper_defs[name] = d
    proposal.programs.sort(key=lambda p: p.index)
    proposal.helpers = [to_source(d) for d in helper_defs.values()]


def parse_edit_response(text: str, name: str) -> str | None:
    """The edited definition of ``name`` from an edit answer, or None."""
    m = None
    for m in _EDIT_MARK.finditer(text or ""):
        pass
    body = text[m.end():] if m else (text or "")
    _, module = extract_code(body)
    if module is None:
        return None
    for stmt in module.body:
        if isinstance(stmt, FunctionDef) and stmt.name == name:
            return to_source(stmt)
    return None


def parse_program_response(text: str, marker: str | None = None):
    """First parseable program in free-form model text: (source, diagnostic)."""
    text = text or ""
    if marker:
        m = None
        for m in re.finditer(re.escape(marker), text):
            pass
        if m:
            text = text[m.end():]
    src, module = extract_code(text)
    if module is None:
        return None, "no parseable program in completion"
    return to_source(module), ""
