"""Regenerate the bundled toy LOGO corpus and its replay fixtures.

Runs preprocess, train and both test arms through the CLI with the scripted
responder from tests/toy_responder.py, recording every model exchange.
Re-run this whenever a prompt template changes (fixture keys hash the prompt).
"""
import argparse
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from libforge.cli import main  # noqa: E402
from libforge.dataset import Example, write_examples  # noqa: E402
from libforge.llm import FunctionBackend, RecordingBackend  # noqa: E402
from toy_responder import TEST_QUERIES, TRAIN_QUERIES, primitive_program, respond  # noqa: E402

DATA = ROOT / "src" / "libforge" / "data"


def write_corpus():
    train = [Example(f"logo-{i:02d}", q, primitive_program(q), "train") for i, q in enumerate(TRAIN_QUERIES, 1)]
    test = [Example(f"logo-test-{i:02d}", q, primitive_program(q), "test") for i, q in enumerate(TEST_QUERIES, 1)]
    write_examples(DATA / "logo_toy.jsonl", train)
    write_examples(DATA / "logo_toy_test.jsonl", test)


def run_pipeline(gateway, work: Path) -> None:
    steps = [
        ["preprocess", str(DATA / "logo_toy.jsonl"), "--domain", "logo", "--out", str(work)],
        ["train", str(work / "batches.json"), "--out", str(work)],
        ["test", str(work), str(DATA / "logo_toy_test.jsonl"), "--batches", str(work / "batches.json"),
         "--out", str(work), "--mode", "library"],
        ["test", str(work), str(DATA / "logo_toy_test.jsonl"), "--batches", str(work / "batches.json"),
         "--out", str(work), "--mode", "baseline"],
    ]
    for argv in steps:
        code = main(argv, gateway=gateway)
        if code != 0:
            raise SystemExit(f"{argv[0]} failed with exit code {code}")


def main_script():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--keep", help="keep the work directory here instead of a temp dir")
    args = ap.parse_args()
    write_corpus()
    fixtures = DATA / "fixtures"
    shutil.rmtree(fixtures, ignore_errors=True)
    gateway = RecordingBackend(FunctionBackend(respond), fixtures)
    work = Path(args.keep) if args.keep else Path(tempfile.mkdtemp(prefix="toy-"))
    run_pipeline(gateway, work)
    print(f"{len(list(fixtures.glob('*.json')))} fixtures written to {fixtures}; run output in {work}")


if __name__ == "__main__":
    main_script()
