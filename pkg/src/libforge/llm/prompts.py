"""Prompt builders for refactoring, retrying, commenting, editing and synthesis.

Every builder returns a :class:`ChatRequest` with a single user message, so
the serialized request (and therefore its replay key) depends only on the
prompt text and sampling settings.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .backends import ChatRequest

MAX_AGENT_HELPERS = 20

_NUMBER_WORDS = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"]

LOGO_EMBED_NOTE = (
    "If the original function uses `embed`, you will likely need to use `embed` in your version. "
    "All code to be repeated needs to be included within the triple quotes passed to embed.")

THOUGHT_FORMAT = """\
# Thoughts:
# 1. The query asks for: <query intention>
# 2. <query> can be solved by <components>.
# 3. I will use helper function <function> to <goal>.
<code for program {i}>"""


@dataclass(frozen=True)
class Case:
    """One unit test of a helper: the query and the program that calls it."""
    query: str
    program: str
    feedback: str = ""


@dataclass(frozen=True)
class Failure:
    index: int
    query: str
    original: str
    attempt: str
    helpers: tuple = ()


def _count_word(n: int) -> str:
    return _NUMBER_WORDS[n] if n < len(_NUMBER_WORDS) else str(n)


def helpers_block(helpers: Sequence[str], header: str) -> str:
    if not helpers:
        return ""
    return header + "\n" + "\n\n".join(h.rstrip() for h in helpers) + "\n"


def _request(text: str, **kw) -> ChatRequest:
    return ChatRequest.user(text.rstrip() + "\n", **kw)


def _logo_note(domain) -> str:
    return LOGO_EMBED_NOTE if domain.name == "logo" else ""


def build_refactor_prompt(batch, helpers: Sequence[str], domain, **kw) -> ChatRequest:
    if not batch:
        raise ValueError("cannot build a refactoring prompt for an empty batch")
    n = len(batch)
    parts = [
        f"Please rewrite the following {_count_word(n)} programs to be more efficient.",
        domain.description,
        "The resulting programs MUST execute to the same result as the original programs.",
        "Start by writing helper functions that can reduce the size of the code.",
    ]
    block = helpers_block(helpers, "You can also choose from the following helper functions:")
    if block:
        parts.append(block)
    parts.append("")
    for i, ex in enumerate(batch, 1):
        parts.append(f"QUERY {i}: {ex.query}")
        parts.append(f"PROGRAM {i}:\n{ex.program.rstrip()}\n")
    parts.append("Please format your answer as:")
    parts += [f"NEW PROGRAM {i}:" for i in range(1, n + 1)]
    parts.append("NEW HELPERS:\n")
    parts.append("Do not include any text that is not valid Python code.")
    parts.append("Recall that no matter what, your program MUST be formatted in the following fashion:")
    for i in range(1, n + 1):
        parts.append(f"NEW PROGRAM {i}:\n" + THOUGHT_FORMAT.format(i=i))
    parts.append("")
    parts.append("Try to make your new programs as short as possible by introducing shared helper "
                 "functions. Helper function parameters should be as general as possible and helper "
                 "functions should be informatively named.")
    note = _logo_note(domain)
    if note:
        parts.append(note)
    return _request("\n".join(parts), **kw)


def build_retry_prompt(failed: Sequence[Failure], feedback: Sequence[str], helpers: Sequence[str],
                       domain, **kw) -> ChatRequest:
    if len(failed) != len(feedback):
        raise ValueError("retry feedback must align one-to-one with failed programs")
    if not failed:
        raise ValueError("nothing to retry")
    parts = [
        "Some of your rewritten programs did not execute to the same result as the original programs.",
        "Please fix them.",
        domain.description,
    ]
    block = helpers_block(helpers, "You can also choose from the following helper functions:")
    if block:
        parts.append(block)
    parts.append("")
    for f, fb in zip(failed, feedback):
        parts.append(f"QUERY {f.index}: {f.query}")
        parts.append(f"PROGRAM {f.index}:\n{f.original.rstrip()}\n")
        parts.append(f"FAILED PROGRAM {f.index}:\n{f.attempt.rstrip()}\n")
        if f.helpers:
            parts.append(f"FAILED HELPERS {f.index}:\n" + "\n\n".join(h.rstrip() for h in f.helpers) + "\n")
        parts.append(f"FEEDBACK {f.index}:\n{fb.rstrip() or 'The result differs from the original program.'}\n")
    parts.append("Please format your answer as:")
    parts += [f"NEW PROGRAM {f.index}:" for f in failed]
    parts.append("NEW HELPERS:\n")
    parts.append("Do not include any text that is not valid Python code.")
    note = _logo_note(domain)
    if note:
        parts.append(note)
    return _request("\n".join(parts), **kw)


DECOMPOSE_EXAMPLE = """\
Query: Do some action 5 times and then do another action
Query (decomposed):
The query asks: Do some action and then do another action
This can be decomposed into:
1. repeat an action
2. some action
3. another action"""

COMMENT_EXAMPLE = """\
Query: Do some action and then do another action
Code:
do_some_action()
do_another_action()

""" + DECOMPOSE_EXAMPLE + """
Commented code:
# repeat an action
for i in range(5):
    # do some action
    do_some_action()
# do another action
do_another_action()"""


def build_decompose_prompt(query: str, **kw) -> ChatRequest:
    if not query.strip():
        raise ValueError("empty query")
    text = ("You are an expert coder. For each query below, decompose it into its parts.\n"
            f"Example:\n{DECOMPOSE_EXAMPLE}\n\nQuery: {query}\nQuery (decomposed):")
    return _request(text, **kw)


def build_comment_prompt(query: str, program: str, decomposition: str, domain, **kw) -> ChatRequest:
    text = ("Please add comments to the following program to explain what each chunk of code does "
            "with respect to the query.\n"
            "First, decompose the query into parts. Then comment the code with the query parts.\n"
            f"Example:\n{COMMENT_EXAMPLE}\n\n{domain.description}\n\n"
            f"Query: {query}\nCode:\n{program.rstrip()}\n\n"
            f"Query (decomposed):\n{decomposition.strip()}\nCommented code:")
    return _request(text, **kw)


def build_comment_prompts(example, domain, **kw) -> tuple[ChatRequest, Callable[[str], ChatRequest]]:
    """The decomposition request plus a builder that splices its answer into
    the commenting request."""
    first = build_decompose_prompt(example.query, **kw)

    def second(decomposition: str) -> ChatRequest:
        return build_comment_prompt(example.query, example.program, decomposition, domain, **kw)

    return first, second


def _case_text(case: Case) -> str:
    text = f"Query: {case.query}\nProgram:\n{case.program.rstrip()}"
    if case.feedback:
        text += f"\nFeedback: {case.feedback.rstrip()}"
    return text


def build_edit_prompt(name: str, source: str, n_pass: int, n_fail: int, passing: Sequence[Case],
                      failing: Sequence[Case], helpers: Sequence[str], domain, **kw) -> ChatRequest:
    if n_fail < 1 or not failing:
        raise ValueError(f"{name} has no failing cases to edit against")
    total = n_pass + n_fail
    pass_perc, fail_perc = n_pass / total, n_fail / total
    others = "\n\n".join(h.rstrip() for h in helpers) if helpers else "(none)"
    succeeded = _case_text(passing[0]) if passing else "(none)"
    text = f"""\
Refactor the following function to improve performance.
FUNCTION:
```
{source.rstrip()}
```

{domain.description}

You may also use the following helper functions:
{others}

Try to increase the number of passing programs. Try to make programs general. For example, you can add parameters instead of hardcoded values or call other helper functions. First, for each failing query, explain why the programs do not accomplish the query's goal. Output this reasoning as:
Thoughts:
1. The function passes some tests and fails others because <reason>.
2. The failing queries <repeat queries here> asked for <intent>.
3. The program failed because <reason>.
4. This can be addressed by <change>.
Then output your program so that all test cases pass, using the following format: NEW PROGRAM: <program>
Currently, {name} passes in {pass_perc * 100:.1f}% of cases and fails in {fail_perc * 100:.1f}%.

SUCCEEDED:
{succeeded}
FAILED:
{_case_text(failing[0])}
Thoughts:"""
    return _request(text, **kw)


def build_migration_prompt(old_source: str, new_source: str, case: Case, domain, **kw) -> ChatRequest:
    text = f"""\
A helper function was changed. Its old definition was:
```
{old_source.rstrip()}
```
Its new definition is:
```
{new_source.rstrip()}
```
{domain.description}

Rewrite the following program so that it calls the new version of the function and still accomplishes the query.
Query: {case.query}
Program:
{case.program.rstrip()}

Output only code, using the following format: NEW PROGRAM: <program>"""
    return _request(text, **kw)


def _interleave(a: Sequence, b: Sequence) -> list:
    out = []
    for i in range(max(len(a), len(b))):
        if i < len(a):
            out.append(a[i])
        if i < len(b):
            out.append(b[i])
    return out


THOUGHT_INSTRUCTION = (
    "Begin your program with a comment that explains your reasoning. For example, you might write:\n"
    "# Thought: the query asks for {example}, so I will use the {function} function.")


def build_agent_prompt(query: str, helpers: Sequence[str], demo_examples: Sequence[Case],
                       primitive_examples: Sequence[Case], domain, **kw) -> ChatRequest:
    if len(helpers) > MAX_AGENT_HELPERS:
        raise ValueError(f"at most {MAX_AGENT_HELPERS} helpers fit in an agent prompt, got {len(helpers)}")
    codebank_str = helpers_block(helpers, "You can also use the following helper functions:")
    if domain.name == "logo":
        thought = THOUGHT_INSTRUCTION.format(example="a line", function="forward()")
    else:
        thought = THOUGHT_INSTRUCTION.format(example="a date", function="relevant")
    label = "Thought and Program:"
    icl = "\n\n".join(f"Query: {c.query}\n{label}\n{c.program.rstrip()}"
                      for c in _interleave(demo_examples, primitive_examples))
    text = (f"{domain.agent_instruction}\n\n"
            f"Here's a description of the custom library:\n{domain.description}\n"
            f"{codebank_str}\n"
            f"You will be given a query and have to produce a program. {thought}\n"
            f"Examples:\n{icl}\n\n"
            "Please generate ONLY the code to produce the answer and nothing else.\n"
            f"Query: {query}\n{label}")
    return _request(text, **kw)
