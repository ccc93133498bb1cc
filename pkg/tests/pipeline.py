"""Runs the bundled toy LOGO pipeline through the CLI against the replay fixtures."""
from __future__ import annotations

from pathlib import Path

import libforge
from libforge.cli import main

DATA = Path(libforge.__file__).parent / "data"
FIXTURES = DATA / "fixtures"
TRAIN_SET = DATA / "logo_toy.jsonl"
TEST_SET = DATA / "logo_toy_test.jsonl"


def replay(argv):
    return main(list(argv) + ["--fixtures", str(FIXTURES)])


def preprocess(work: Path) -> int:
    return replay(["preprocess", str(TRAIN_SET), "--domain", "logo", "--out", str(work)])


def train(work: Path, *extra) -> int:
    return replay(["train", str(work / "batches.json"), "--out", str(work), *extra])


def test(work: Path, mode: str) -> int:
    return replay(["test", str(work), str(TEST_SET), "--batches", str(work / "batches.json"),
                   "--out", str(work), "--mode", mode])


def full_run(work: Path, modes=("library", "baseline")) -> None:
    for code in (preprocess(work), train(work), *(test(work, m) for m in modes)):
        if code != 0:
            raise RuntimeError(f"pipeline step failed with exit code {code}")
