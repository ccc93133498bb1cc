from pathlib import Path

import pytest

import libforge
from libforge import codebank as cb
from libforge.dataset import load_examples
from libforge.domains import get_domain
from libforge.llm import FunctionBackend, GatewayError
from libforge.trainer import ConfigError, TrainAborted, TrainConfig, Trainer, train
from libforge.verify import verify

from toy_responder import respond

DATA = Path(libforge.__file__).parent / "data"
TOY = load_examples(DATA / "logo_toy.jsonl")
LOGO = get_domain("logo")


def prompts_starting(backend, prefix):
    return [r for r in backend.requests if r.prompt.startswith(prefix)]


def config(**kw):
    base = dict(domain="logo", batch_size=1, edit_every=5, prune_every=5, rounds=1, min_uses=1)
    base.update(kw)
    return TrainConfig(**base)


def test_stage_schedule_every_five_batches():
    batches = [[ex] for ex in TOY[:10]]
    gw = FunctionBackend(respond)
    _, _, report = train(batches, config(), gw)
    assert len(report.batches) == 10
    assert report.event_kinds() == [(1, 5, "edit"), (1, 5, "prune"), (1, 10, "edit"), (1, 10, "prune")]


def test_stage_schedule_counts_across_epochs():
    batches = [[ex] for ex in TOY[:3]]
    _, _, report = train(batches, config(rounds=2, edit_every=2, prune_every=4), FunctionBackend(respond))
    assert report.event_kinds() == [(1, 2, "edit"), (2, 4, "edit"), (2, 4, "prune"), (2, 6, "edit")]


def test_filter_prune_runs_once_after_training():
    batches = [[ex] for ex in TOY[:2]]
    _, _, report = train(batches, config(filter_before_testing=True), FunctionBackend(respond))
    assert [e["kind"] for e in report.events] == ["filter"]


@pytest.mark.parametrize("stage", ["retry", "edit", "prune"])
def test_ablation_omits_stage(stage):
    batches = [[ex] for ex in TOY]
    full_gw, off_gw = FunctionBackend(respond), FunctionBackend(respond)
    _, _, full = train(batches, config(rounds=2, filter_before_testing=True), full_gw)
    _, _, off = train(batches, config(rounds=2, filter_before_testing=True, **{stage: False}), off_gw)
    assert full.stages[stage] and not off.stages[stage]
    if stage == "retry":
        assert sum(b.retried for b in full.batches) > 0
        assert sum(b.retried for b in off.batches) == 0
        assert not prompts_starting(off_gw, "Some of your rewritten programs")
    elif stage == "edit":
        assert "edit" in [e["kind"] for e in full.events]
        assert "edit" not in [e["kind"] for e in off.events]
        assert not prompts_starting(off_gw, "Refactor the following function")
    else:
        assert {"prune", "filter"} <= {e["kind"] for e in full.events}
        assert not {"prune", "filter"} & {e["kind"] for e in off.events}


def test_toy_training_learns_verified_helpers():
    batches = [TOY[i:i + 3] for i in range(0, 12, 3)]
    bank, demos, report = train(batches, config(batch_size=3, rounds=3, min_uses=3), FunctionBackend(respond))
    assert len(bank) >= 2
    assert sum(b.recovered for b in report.batches) >= 1
    adopted = [d for e in report.events if e["kind"] == "edit" for d in e["details"] if d["adopted"]]
    assert [d["function"] for d in adopted] == ["draw_triangle"] and adopted[0]["migrated"]
    assert bank.functions["draw_triangle"].params == ["size"]
    examples = {e.id: e for e in TOY}
    for d in demos.demos:
        if d.success:
            ex = examples[d.example_id]
            assert verify(d.program, LOGO.result(LOGO.run(ex.program)), bank.definitions(), LOGO, ex).passed


def test_helpers_shadowing_primitives_are_rejected():
    batches = [[ex] for ex in TOY[:2]]

    def hostile(req):
        return respond(req).replace("NEW HELPERS:\n", "NEW HELPERS:\ndef forward(x):\n    left(x)\n")

    bank, _, report = train(batches, config(), FunctionBackend(hostile))
    assert "forward" not in bank.functions
    assert any("forward rejected: shadows a primitive" in d for b in report.batches for d in b.diagnostics)


def test_helpers_of_failed_programs_go_to_rejected():
    nine = [ex for ex in TOY if ex.query == "draw a small 9 gon"]
    bank, demos, _ = train([nine], config(retry=False), FunctionBackend(respond))
    assert "draw_small_9gon" not in bank.functions
    assert [r["helper"] for r in bank.rejected] == ["draw_small_9gon"]
    assert demos.demos[0].success is False and demos.demos[0].helpers_used == []


def test_resume_after_gateway_failure(tmp_path):
    batches = [TOY[i:i + 3] for i in range(0, 12, 3)]
    cfg = config(batch_size=3, rounds=2)
    ref_dir = tmp_path / "ref"
    train(batches, cfg, FunctionBackend(respond), ref_dir)

    calls = {"n": 0}

    def flaky(req):
        calls["n"] += 1
        if calls["n"] == 6:
            raise GatewayError("connection reset")
        return respond(req)

    run_dir = tmp_path / "run"
    with pytest.raises(TrainAborted):
        Trainer(cfg, FunctionBackend(flaky), out_dir=run_dir).train(batches)
    trainer = Trainer.resume(run_dir, FunctionBackend(respond), batches)
    assert 0 < trainer.step < 8
    trainer.train(batches)
    for name in (cb.CODEBANK_FILE, cb.DEMOBANK_FILE, "train_report.json"):
        assert (run_dir / name).read_bytes() == (ref_dir / name).read_bytes(), name


def test_resume_rejects_a_different_plan(tmp_path):
    batches = [[ex] for ex in TOY[:2]]
    train(batches, config(), FunctionBackend(respond), tmp_path)
    with pytest.raises(ConfigError):
        Trainer.resume(tmp_path, FunctionBackend(respond), batches[::-1])


def test_config_validation_and_presets():
    assert TrainConfig.for_domain("logo").batch_size == 5
    assert TrainConfig.for_domain("textcraft", rounds=2).rounds == 2
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0).validate()
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({"nonsense": 1})
