import json

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from libforge.dataset import Example
from libforge.domains import get_domain
from libforge.llm import (
    MAX_AGENT_HELPERS, Case, ChatRequest, Failure, FunctionBackend, GatewayError, HttpBackend, RecordingBackend,
    ReplayBackend, ReplayMiss, RetryableError, build_agent_prompt, build_comment_prompts, build_edit_prompt,
    build_migration_prompt, build_refactor_prompt, build_retry_prompt, extract_code, parse_edit_response,
    parse_program_response, parse_refactor_response, write_fixture,
)
from libforge.llm.backends import fixtures_digest, list_fixtures

LOGO = get_domain("logo")
DATE = get_domain("date")

# -- requests and backends -----------------------------------------------------------


def test_request_key_is_stable_and_sensitive():
    a = ChatRequest.user("hello")
    assert a.key() == ChatRequest.user("hello").key()
    assert a.key() != ChatRequest.user("hello", temperature=0.5).key()
    assert ChatRequest.from_json(json.loads(a.serialize())) == a


def test_replay_strict_and_lenient(tmp_path):
    req = ChatRequest.user("q")
    write_fixture(tmp_path, req, "answer")
    assert ReplayBackend(tmp_path).complete(req) == "answer"
    other = ChatRequest.user("unrecorded")
    with pytest.raises(ReplayMiss, match=other.key()):
        ReplayBackend(tmp_path).complete(other)
    lenient = ReplayBackend(tmp_path, strict=False)
    assert lenient.complete(other) == "" and lenient.misses == [other.key()]


def test_recording_then_replay(tmp_path):
    inner = FunctionBackend(lambda r: r.prompt.upper())
    rec = RecordingBackend(inner, tmp_path)
    req = ChatRequest.user("abc")
    assert rec.complete(req) == "ABC"
    assert ReplayBackend(tmp_path).complete(req) == "ABC"
    rows = list_fixtures(tmp_path)
    assert len(rows) == 1 and rows[0]["key"] == req.key()
    assert fixtures_digest(tmp_path) == fixtures_digest(tmp_path)


def _transport(statuses, content="done"):
    calls = []

    def handler(request):
        calls.append(json.loads(request.content))
        status = statuses[min(len(calls) - 1, len(statuses) - 1)]
        if status == 200:
            return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})
        return httpx.Response(status, text="slow down")

    return httpx.MockTransport(handler), calls


def test_http_retries_rate_limits_with_backoff():
    transport, calls = _transport([429, 503, 200])
    sleeps = []
    backend = HttpBackend("http://model.test/v1", "key", transport=transport, sleep=sleeps.append, backoff=0.5)
    assert backend.complete(ChatRequest.user("hi")) == "done"
    assert backend.attempts == 3 and sleeps == [0.5, 1.0]
    assert calls[0]["messages"] == [{"role": "user", "content": "hi"}]


def test_http_gives_up_after_five_attempts():
    transport, calls = _transport([429])
    backend = HttpBackend("http://model.test", transport=transport, sleep=lambda s: None)
    with pytest.raises(RetryableError):
        backend.complete(ChatRequest.user("hi"))
    assert len(calls) == 5


def test_http_client_errors_are_not_retried():
    transport, calls = _transport([400])
    with pytest.raises(GatewayError, match="HTTP 400"):
        HttpBackend("http://model.test", transport=transport, sleep=lambda s: None).complete(ChatRequest.user("x"))
    assert len(calls) == 1


def test_http_from_env_requires_base(monkeypatch):
    monkeypatch.delenv("LIBFORGE_API_BASE", raising=False)
    with pytest.raises(GatewayError):
        HttpBackend.from_env()


# -- prompts ----------------------------------------------------------------------------

BATCH = [Example("a", "draw a square", "forward(1)"), Example("b", "draw a line", "forward(2)")]


def test_refactor_prompt_layout():
    p = build_refactor_prompt(BATCH, [], LOGO).prompt
    assert p.startswith("Please rewrite the following two programs to be more efficient.")
    assert "helper functions:" not in p.split("QUERY 1")[0]
    assert "QUERY 2: draw a line" in p and "NEW PROGRAM 2:" in p and "NEW HELPERS:" in p
    assert "embed" in p
    with_helpers = build_refactor_prompt(BATCH, ["def f():\n    forward(1)\n"], DATE).prompt
    assert "You can also choose from the following helper functions:\ndef f():" in with_helpers
    with pytest.raises(ValueError):
        build_refactor_prompt([], [], LOGO)


def test_retry_prompt_sections():
    f = Failure(2, "draw a line", "forward(2)", "f()", ("def f():\n    forward(3)\n",))
    p = build_retry_prompt([f], ["Error: boom"], [], LOGO).prompt
    for marker in ("FAILED PROGRAM 2:", "FAILED HELPERS 2:", "FEEDBACK 2:\nError: boom", "NEW PROGRAM 2:"):
        assert marker in p
    with pytest.raises(ValueError):
        build_retry_prompt([f], [], [], LOGO)


def test_comment_prompts_chain():
    first, second = build_comment_prompts(BATCH[0], LOGO)
    assert first.prompt.rstrip().endswith("Query: draw a square\nQuery (decomposed):")
    assert second("1. square").prompt.rstrip().endswith("Commented code:")


def test_edit_prompt_rates():
    p = build_edit_prompt("f", "def f():\n    forward(1)\n", 3, 1, [Case("q1", "f()")], [Case("q2", "f()", "bad")],
                          [], LOGO).prompt
    assert "Currently, f passes in 75.0% of cases and fails in 25.0%." in p
    assert "FAILED:\nQuery: q2\nProgram:\nf()\nFeedback: bad" in p
    with pytest.raises(ValueError):
        build_edit_prompt("f", "def f():\n    x = 1\n", 1, 0, [], [], [], LOGO)


def test_migration_prompt():
    p = build_migration_prompt("def f():\n    x = 1\n", "def f(k):\n    x = k\n", Case("q", "f()"), LOGO).prompt
    assert p.startswith("A helper function was changed") and "NEW PROGRAM: <program>" in p


def test_agent_prompt_interleaves_and_caps_helpers():
    demos = [Case(f"d{i}", "f()") for i in range(2)]
    prims = [Case(f"p{i}", "forward(1)") for i in range(3)]
    p = build_agent_prompt("draw", ["def f():\n    forward(1)\n"], demos, prims, LOGO).prompt
    order = [line[len("Query: "):] for line in p.splitlines() if line.startswith("Query: ")]
    assert order == ["d0", "p0", "d1", "p1", "p2", "draw"]
    assert p.rstrip().endswith("Query: draw\nThought and Program:")
    with pytest.raises(ValueError):
        build_agent_prompt("q", ["def f():\n    x = 1\n"] * (MAX_AGENT_HELPERS + 1), [], [], LOGO)


# -- responses ----------------------------------------------------------------------------


def test_extract_code_strips_fences_and_numbered_lines():
    src, module = extract_code("```python\n1. think\nforward(1)\n```")
    assert module is not None and "# 1. think" in src


def test_extract_code_keeps_longest_parseable_window():
    src, _ = extract_code("Sure! Here it is:\nforward(1)\nleft(90)\nHope that helps.")
    assert src == "forward(1)\nleft(90)\n"
    assert extract_code("no code here at all, sorry")[0] is None


def test_parse_refactor_response():
    text = ("NEW PROGRAM 1:\n# Thoughts:\n# 1. x\ndraw_square(2)\n"
            "NEW PROGRAM 2:\ndef draw_line(n):\n    forward(n)\ndraw_line(2)\n"
            "NEW PROGRAM 9:\nforward(1)\n"
            "NEW HELPERS:\ndef draw_square(size):\n    for i in range(4):\n        forward(size)\n"
            "        left(90)\ndef broken(:\n    pass\n")
    p = parse_refactor_response(text, 2)
    assert [x.index for x in p.programs] == [1, 2]
    assert p.program(1).thoughts.startswith("Thoughts:")
    assert p.program(2).source == "draw_line(2)\n"
    assert sorted(h.split("(")[0] for h in p.helpers) == ["def draw_line", "def draw_square"]
    assert any("outside the batch" in d for d in p.diagnostics)
    assert any("unparseable helper" in d for d in p.diagnostics)


@settings(max_examples=200, deadline=None)
@given(st.text())
def test_parse_refactor_response_is_total(text):
    p = parse_refactor_response(text, 3)
    assert all(1 <= x.index <= 3 for x in p.programs)


def test_parse_edit_and_program_responses():
    text = "Thoughts:\n1. x\nNEW PROGRAM:\n```python\ndef f(k):\n    forward(k)\n```"
    assert parse_edit_response(text, "f") == "def f(k):\n    forward(k)\n"
    assert parse_edit_response(text, "g") is None
    src, diag = parse_program_response("Thought and Program:\n# Thought: go\nforward(2)\n", "Program:")
    assert src == "# Thought: go\nforward(2)\n" and diag == ""
    assert parse_program_response("Sorry, I cannot help!", None)[0] is None
