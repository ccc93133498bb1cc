"""Command line interface: preprocess, train, test, inspect, fixtures.

Exit codes: 0 success, 1 user error (bad input, config, missing fixture),
2 internal error.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from . import codebank as cb
from .agent import BASELINE, LIBRARY, Agent, AgentConfig, usage_histogram
from .dataset import DatasetError, Example, file_digest, load_examples
from .domains import DomainError, get_domain
from .llm import GatewayError, HttpBackend, RecordingBackend, ReplayBackend, fixtures_digest, list_fixtures
from .preprocess import EmbeddingError, add_comments, plan_batches, shuffle_batches
from .retrieval import build_index
from .trainer import ConfigError, TrainAborted, TrainConfig, Trainer

log = logging.getLogger("libforge")

BATCHES_FILE = "batches.json"
MANIFEST_FILE = "manifest.jsonl"
ENV_PREFIX = "LIBFORGE_"
USER_ERRORS = (DatasetError, ConfigError, cb.BankError, DomainError, EmbeddingError, GatewayError,
               TrainAborted, FileNotFoundError, IsADirectoryError, json.JSONDecodeError)


class UserError(Exception):
    pass


# -- configuration --------------------------------------------------------------

def _coerce(value: str, default):
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def layered_config(domain: str, config_file, flags: dict) -> TrainConfig:
    """Domain preset, then config file, then LIBFORGE_* environment, then flags."""
    base = dataclasses.asdict(TrainConfig.for_domain(domain))
    if config_file:
        data = json.loads(Path(config_file).read_text())
        if not isinstance(data, dict):
            raise ConfigError(f"{config_file}: config must be a JSON object")
        if data.get("domain", domain) != domain:
            raise ConfigError(f"{config_file}: config is for domain {data['domain']!r}, not {domain!r}")
        unknown = sorted(set(data) - set(base))
        if unknown:
            raise ConfigError(f"{config_file}: unknown config keys: {', '.join(unknown)}")
        base.update(data)
    for key, default in list(base.items()):
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None and key != "domain":
            try:
                base[key] = _coerce(env, default)
            except ValueError as err:
                raise ConfigError(f"{ENV_PREFIX}{key.upper()}: {err}") from None
    base.update({k: v for k, v in flags.items() if v is not None})
    base["domain"] = domain
    return TrainConfig.from_dict(base)


def make_gateway(args):
    backend = args.backend or os.environ.get(ENV_PREFIX + "BACKEND", "replay")
    fixtures = args.fixtures or os.environ.get(ENV_PREFIX + "FIXTURES")
    if backend == "replay":
        if not fixtures:
            raise ConfigError("the replay backend needs --fixtures DIR (or LIBFORGE_FIXTURES)")
        return ReplayBackend(fixtures, strict=not args.lenient)
    if backend == "http":
        gw = HttpBackend.from_env()
        return RecordingBackend(gw, fixtures) if fixtures else gw
    raise ConfigError(f"unknown backend {backend!r}")


# -- manifests --------------------------------------------------------------------

def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def append_manifest(out_dir: Path, command: str, config: dict, inputs, outputs, gateway, started: str) -> None:
    fixtures = getattr(gateway, "dir", None)
    entry = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "backend": getattr(gateway, "id", type(gateway).__name__) if gateway is not None else None,
        "fixtures_sha256": fixtures_digest(fixtures) if fixtures else None,
        "outputs": [str(p) for p in outputs],
        "started": started,
        "finished": _now(),
    }
    with open(out_dir / MANIFEST_FILE, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def read_batches(path) -> tuple[dict, list]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema_version") != cb.SCHEMA_VERSION or "batches" not in data:
        raise ConfigError(f"{path}: not a batch file")
    batches = [[Example(**e) for e in b] for b in data["batches"]]
    return data, batches


# -- commands -------------------------------------------------------------------------

def cmd_preprocess(args, gateway):
    started = _now()
    config = layered_config(args.domain, args.config, {"batch_size": args.batch_size,
                                                       "add_comments": args.comments,
                                                       "embedding": args.embedding, "seed": args.seed})
    examples = load_examples(args.dataset, split=args.split)
    if not examples:
        raise DatasetError(f"{args.dataset}: no examples in split {args.split!r}")
    domain = get_domain(config.domain)
    diagnostics = []
    if config.add_comments:
        if gateway is None:
            raise ConfigError("commenting is enabled but no model backend is configured")
        commented = []
        for ex in examples:
            ex, diag = add_comments(ex, gateway, domain)
            commented.append(ex)
            diagnostics.append(diag)
        examples = commented
    batches = plan_batches(examples, config.batch_size, config.embedding, curriculum=True)
    out = Path(args.out)
    path = out / BATCHES_FILE
    _write_json(path, {"schema_version": cb.SCHEMA_VERSION, "domain": config.domain,
                       "batch_size": config.batch_size, "dataset_sha256": file_digest(args.dataset),
                       "batches": [[e.to_json() for e in b] for b in batches], "diagnostics": diagnostics})
    append_manifest(out, "preprocess", dataclasses.asdict(config), [args.dataset], [path], gateway, started)
    print(f"{len(examples)} examples -> {len(batches)} batches of up to {config.batch_size}; wrote {path}")
    return 0


def cmd_train(args, gateway):
    started = _now()
    meta, batches = read_batches(args.batches)
    flags = {"rounds": args.rounds, "edit_every": args.edit_every, "prune_every": args.prune_every,
             "theta": args.theta, "min_uses": args.min_uses, "seed": args.seed, "budget": args.budget,
             "filter_before_testing": args.filter_before_testing}
    for name in ("retry", "edit", "prune", "curriculum"):
        if getattr(args, f"no_{name}"):
            flags[name] = False
    config = layered_config(meta["domain"], args.config, flags)
    if not config.curriculum:
        batches = shuffle_batches(batches, config.seed)
    out = Path(args.out)
    if args.resume and (out / "train_state.json").exists():
        trainer = Trainer.resume(out, gateway, batches)
        log.info("resuming after batch %d", trainer.step)
    else:
        trainer = Trainer(config, gateway, out_dir=out)
    bank, demos, report = trainer.train(batches)
    outputs = [out / cb.CODEBANK_FILE, out / cb.DEMOBANK_FILE, out / "train_report.json"]
    append_manifest(out, "train", dataclasses.asdict(trainer.config), [args.batches], outputs, gateway, started)
    print(report.summary())
    return 0


def cmd_test(args, gateway):
    started = _now()
    bank, demos = cb.load(args.banks)
    meta, batches = read_batches(args.batches)
    domain = meta["domain"]
    if args.domain and args.domain != domain:
        raise ConfigError(f"banks were trained on {domain!r}, not {args.domain!r}")
    train_examples = [e for b in batches for e in b]
    testset = load_examples(args.testset)
    config = AgentConfig(domain=domain, icl_budget=args.icl_budget, ratio=args.ratio,
                         max_helpers=args.max_helpers, mode=args.mode)
    try:
        config.validate()
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if config.mode == BASELINE:
        index = build_index(None, None, train_examples)
    else:
        index = build_index(bank, demos, train_examples)
    result = Agent(bank, index, gateway, config).evaluate(testset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records_path = out / f"results-{config.mode}.jsonl"
    records_path.write_text("".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in result.records))
    summary_path = out / f"summary-{config.mode}.json"
    _write_json(summary_path, result.summary())
    append_manifest(out, "test", dataclasses.asdict(config), [args.banks + "/" + cb.CODEBANK_FILE,
                    args.banks + "/" + cb.DEMOBANK_FILE, args.batches, args.testset],
                    [records_path, summary_path], gateway, started)
    for ex_id in result.skipped:
        print(f"warning: {ex_id} has no gold result; skipped", file=sys.stderr)
    print(f"{config.mode}: accuracy {result.accuracy:.3f} ({sum(r.correct for r in result.records)}"
          f"/{len(result.records)}); wrote {records_path}")
    return 0


def load_results(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def cmd_inspect(args, gateway=None):
    bank, demos = cb.load(args.banks)
    funcs = sorted(bank.functions.values(), key=lambda f: (-f.score(), f.name))
    usage = None
    if args.results:
        hist = usage_histogram(load_results(args.results))
        usage = sorted(hist.items(), key=lambda kv: (-kv[1], kv[0]))[:args.top]
    if args.format == "json":
        out = cb.codebank_to_json(bank)
        out["demos"] = cb.demobank_to_json(demos)["demos"]
        out["ranking"] = [{"name": f.name, "score": f.score(), "uses": len(f.records), "passes": f.passes}
                          for f in funcs]
        if usage is not None:
            out["usage"] = dict(usage)
        print(json.dumps(out, sort_keys=True, indent=2))
        return 0
    print(f"{len(funcs)} helpers, {len(demos)} demos ({len(demos.eligible())} usable as demonstrations)")
    if funcs:
        print(f"{'name':<32} {'score':>7} {'uses':>5} {'pass%':>6}  description")
        for f in funcs:
            uses = len(f.records)
            rate = f"{100 * f.passes / uses:.1f}" if uses else "-"
            print(f"{f.name:<32} {f.score():>7.2f} {uses:>5} {rate:>6}  {f.description}")
        for f in funcs:
            print()
            print(f.source.rstrip())
    if bank.tombstones:
        print("\npruned: " + ", ".join(f"{n} ({t['score']:.2f})" for n, t in sorted(bank.tombstones.items())))
    if usage is not None:
        print(f"\ntop {args.top} helpers by calls in {args.results}:")
        for name, count in usage:
            print(f"{name:<32} {count:>6}  {'#' * min(count, 60)}")
    return 0


def cmd_fixtures(args, gateway=None):
    if args.action == "list":
        rows = list_fixtures(args.dir)
        for r in rows:
            print(f"{r['key'][:16]}  {r['completion_chars']:>6}  {r['first_line'][:70]}")
        print(f"{len(rows)} fixtures")
        return 0
    # record: run a nested command against the HTTP backend, storing every exchange
    inner = RecordingBackend(HttpBackend.from_env(), args.dir)
    rest = [a for a in args.command if a != "--"]
    if not rest:
        raise ConfigError("fixtures record needs a command to run, e.g. `-- train run/batches.json --out run`")
    return main(rest, gateway=inner)


# -- parser ---------------------------------------------------------------------------

def _gateway_flags(p):
    p.add_argument("--backend", choices=["replay", "http"], help="model backend (default: replay)")
    p.add_argument("--fixtures", help="replay fixture directory (env LIBFORGE_FIXTURES)")
    p.add_argument("--lenient", action="store_true", help="replay misses return an empty completion")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="libforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="cluster a dataset into curriculum-ordered batches")
    p.add_argument("dataset")
    p.add_argument("--domain", required=True, choices=["logo", "date", "textcraft"])
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--config")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--embedding", choices=["local", "remote"])
    p.add_argument("--comments", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--seed", type=int)
    _gateway_flags(p)
    p.set_defaults(func=cmd_preprocess, needs_gateway="comments")

    p = sub.add_parser("train", help="learn a helper library from a batch file")
    p.add_argument("batches")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--rounds", type=int)
    p.add_argument("--edit-every", type=int)
    p.add_argument("--prune-every", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--min-uses", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--filter-before-testing", action=argparse.BooleanOptionalAction, default=None)
    for name in ("retry", "curriculum", "prune", "edit"):
        p.add_argument(f"--no-{name}", action="store_true", help=f"ablation: skip the {name} stage")
    p.add_argument("--resume", action="store_true", help="continue from train_state.json in --out")
    _gateway_flags(p)
    p.set_defaults(func=cmd_train, needs_gateway="always")

    p = sub.add_parser("test", help="synthesize and score programs for a test set")
    p.add_argument("banks", help="directory holding codebank.json and demobank.json")
    p.add_argument("testset")
    p.add_argument("--batches", required=True, help="batch file whose examples serve as primitive demonstrations")
    p.add_argument("--out", required=True)
    p.add_argument("--domain")
    p.add_argument("--mode", choices=[LIBRARY, BASELINE], default=LIBRARY)
    p.add_argument("--max-helpers", type=int, default=20)
    p.add_argument("--icl-budget", type=int, default=10)
    p.add_argument("--ratio", type=float, default=0.5)
    _gateway_flags(p)
    p.set_defaults(func=cmd_test, needs_gateway="always")

    p = sub.add_parser("inspect", help="show helpers, scores and usage")
    p.add_argument("banks")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--results", help="results JSONL from `test` for a usage histogram")
    p.add_argument("--top", type=int, default=5)
    p.set_defaults(func=cmd_inspect, needs_gateway="never")

    p = sub.add_parser("fixtures", help="list or record replay fixtures")
    p.add_argument("action", choices=["list", "record"])
    p.add_argument("dir")
    p.add_argument("command", nargs=argparse.REMAINDER)
    p.set_defaults(func=cmd_fixtures, needs_gateway="never")
    return parser


def main(argv=None, gateway=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if gateway is None and args.needs_gateway == "always":
            gateway = make_gateway(args)
        elif gateway is None and args.needs_gateway == "comments" and (args.backend or args.fixtures):
            gateway = make_gateway(args)
        return args.func(args, gateway)
    except USER_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - last-resort boundary
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
