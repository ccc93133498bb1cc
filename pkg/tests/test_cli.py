import json

import pytest

from libforge import codebank as cb
from libforge.cli import layered_config, main
from libforge.trainer import ConfigError

import pipeline


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    work = tmp_path_factory.mktemp("toy")
    pipeline.full_run(work)
    return work


def test_pipeline_outputs(run_dir):
    for name in ("batches.json", cb.CODEBANK_FILE, cb.DEMOBANK_FILE, "train_report.json",
                 "results-library.jsonl", "summary-library.json", "results-baseline.jsonl", "manifest.jsonl"):
        assert (run_dir / name).exists(), name
    manifest = [json.loads(line) for line in (run_dir / "manifest.jsonl").read_text().splitlines()]
    assert [m["command"] for m in manifest] == ["preprocess", "train", "test", "test"]
    assert all(m["backend"] == "replay" and m["fixtures_sha256"] for m in manifest)
    summary = json.loads((run_dir / "summary-library.json").read_text())
    assert summary["n"] == 20


def test_inspect_text_and_json(run_dir, capsys):
    assert main(["inspect", str(run_dir), "--results", str(run_dir / "results-library.jsonl")]) == 0
    out = capsys.readouterr().out
    assert "helpers" in out and "top 5 helpers by calls" in out
    assert main(["inspect", str(run_dir), "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    scores = [r["score"] for r in data["ranking"]]
    assert scores == sorted(scores, reverse=True)


def test_fixtures_list(capsys):
    assert main(["fixtures", "list", str(pipeline.FIXTURES)]) == 0
    assert capsys.readouterr().out.strip().endswith("fixtures")


def test_missing_input_is_a_user_error(tmp_path, capsys):
    assert main(["inspect", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_duplicate_ids_rejected(tmp_path, capsys):
    line = json.dumps({"id": "x", "query": "q", "program": "forward(1)", "split": "train"})
    (tmp_path / "d.jsonl").write_text(line + "\n" + line + "\n")
    code = main(["preprocess", str(tmp_path / "d.jsonl"), "--domain", "logo", "--out", str(tmp_path),
                 "--no-comments"])
    assert code == 1 and "duplicate ids: x" in capsys.readouterr().err


def test_replay_miss_is_a_user_error(tmp_path, capsys):
    empty = tmp_path / "fixtures"
    empty.mkdir()
    assert pipeline.preprocess(tmp_path) == 0
    code = main(["train", str(tmp_path / "batches.json"), "--out", str(tmp_path / "o"), "--fixtures", str(empty)])
    assert code == 1 and "no recorded completion" in capsys.readouterr().err


def test_replay_requires_fixture_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("LIBFORGE_FIXTURES", raising=False)
    assert pipeline.preprocess(tmp_path) == 0
    assert main(["train", str(tmp_path / "batches.json"), "--out", str(tmp_path)]) == 1


def test_internal_errors_exit_2(tmp_path, monkeypatch, capsys):
    import libforge.cli as cli

    def boom(args, gateway=None):
        raise RuntimeError("kaboom")

    monkeypatch.setattr(cli, "cmd_inspect", boom)
    parser_inspect = cli.build_parser
    monkeypatch.setattr(cli, "build_parser", lambda: _with_func(parser_inspect(), boom))
    assert main(["inspect", str(tmp_path)]) == 2
    assert "internal error" in capsys.readouterr().err


def _with_func(parser, fn):
    parser.set_defaults(func=fn)
    for action in parser._subparsers._group_actions:
        for sub in action.choices.values():
            sub.set_defaults(func=fn)
    return parser


def test_config_layering(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"rounds": 2, "theta": -1.0, "batch_size": 4}))
    monkeypatch.setenv("LIBFORGE_ROUNDS", "4")
    c = layered_config("logo", cfg, {"theta": 0.5})
    assert (c.rounds, c.theta, c.batch_size, c.edit_every) == (4, 0.5, 4, 5)
    cfg.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ConfigError):
        layered_config("logo", cfg, {})
    monkeypatch.setenv("LIBFORGE_RETRY", "maybe")
    with pytest.raises(ConfigError):
        layered_config("logo", None, {})


def test_ablation_flags_reach_the_report(tmp_path):
    assert pipeline.preprocess(tmp_path) == 0
    from libforge.llm import FunctionBackend
    from toy_responder import respond
    for flag in ("--no-retry", "--no-curriculum", "--no-prune", "--no-edit"):
        out = tmp_path / flag.strip("-")
        assert main(["train", str(tmp_path / "batches.json"), "--out", str(out), flag],
                    gateway=FunctionBackend(respond)) == 0
        report = json.loads((out / "train_report.json").read_text())
        stage = flag[len("--no-"):]
        assert report["stages"][stage] is False
        assert all(v for k, v in report["stages"].items() if k != stage)


def test_no_curriculum_changes_batch_order(tmp_path):
    assert pipeline.preprocess(tmp_path) == 0
    from libforge.llm import FunctionBackend
    from toy_responder import respond
    orders = {}
    for name, extra in (("cur", []), ("shuf", ["--no-curriculum", "--seed", "1"])):
        assert main(["train", str(tmp_path / "batches.json"), "--out", str(tmp_path / name), "--rounds", "1",
                     *extra], gateway=FunctionBackend(respond)) == 0
        report = json.loads((tmp_path / name / "train_report.json").read_text())
        orders[name] = [b["examples"] for b in report["batches"]]
    batches = json.loads((tmp_path / "batches.json").read_text())["batches"]
    assert orders["cur"] == [[e["id"] for e in b] for b in batches]
    assert orders["shuf"] != orders["cur"] and sorted(orders["shuf"]) == sorted(orders["cur"])


def test_resume_flag_continues(tmp_path):
    assert pipeline.preprocess(tmp_path) == 0
    from libforge.llm import FunctionBackend, GatewayError
    from toy_responder import respond
    n = {"calls": 0}

    def flaky(req):
        n["calls"] += 1
        if n["calls"] == 5:
            raise GatewayError("timeout")
        return respond(req)

    out = tmp_path / "run"
    argv = ["train", str(tmp_path / "batches.json"), "--out", str(out)]
    assert main(argv, gateway=FunctionBackend(flaky)) == 1
    assert main(argv + ["--resume"], gateway=FunctionBackend(respond)) == 0
    ref = tmp_path / "ref"
    assert main(["train", str(tmp_path / "batches.json"), "--out", str(ref)], gateway=FunctionBackend(respond)) == 0
    assert (out / cb.CODEBANK_FILE).read_bytes() == (ref / cb.CODEBANK_FILE).read_bytes()
