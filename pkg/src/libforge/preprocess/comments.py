"""Annotating primitive programs with comments that mirror the query."""
from __future__ import annotations

import dataclasses
import logging

from ..domains import compare_results
from ..lang import ParseError, parse, strip_comments, to_source
from ..llm import build_comment_prompts, extract_code

log = logging.getLogger(__name__)

EXACT = "exact"
EXECUTION = "execution"


def _canonical(source: str) -> str:
    return to_source(strip_comments(parse(source)))


def accept_commented(original: str, commented: str, domain, example=None) -> str | None:
    """How the commented program was verified ("exact" / "execution"), or None."""
    try:
        if _canonical(commented) == _canonical(original):
            return EXACT
    except ParseError:
        return None
    gold = domain.run(original, example)
    new = domain.run(commented, example)
    if gold.ok and new.ok and compare_results(domain, domain.result(gold), domain.result(new)):
        return EXECUTION
    return None


def add_comments(example, gateway, domain):
    """Returns (example, diagnostic). The example is returned unchanged when
    the commented code cannot be verified."""
    first, second = build_comment_prompts(example, domain)
    decomposition = gateway.complete(first)
    answer = gateway.complete(second(decomposition))
    source, _ = extract_code(answer)
    if source is None:
        return example, f"{example.id}: no parseable commented program"
    how = accept_commented(example.program, source, domain, example)
    if how is None:
        return example, f"{example.id}: commented program does not match the original"
    return dataclasses.replace(example, program=source, comments=source), f"{example.id}: accepted ({how})"
