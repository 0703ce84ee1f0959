"""Operator-facing command line: gen, train, score, eval, serve, inspect.

Flags override values from ``--config`` (a single JSON document); the
effective configuration is persisted in the run manifest so every artifact
can be traced back to the exact settings that produced it.

Exit codes: 1 config error, 2 data error, 3 training divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline, server, synthgen
from .artifacts import (
    BALANCE_REPORT_FILE,
    EVAL_REPORT_FILE,
    MANIFEST_FILE,
    TRAINING_LOG_FILE,
    RunConfig,
    read_json,
)
from .errors import ConfigError, DataError, TrainingDiverged
from .ranking import format_report_table


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logcause",
        description="Rank the log lines that explain each failure.",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic corpus with labeled failures")
    gen.add_argument("--seed", type=int, default=7)
    gen.add_argument("--out-dir", default="data")
    gen.add_argument("--profile", choices=sorted(synthgen.PROFILES), default="small")

    for name, doc in (
        ("train", "tokenize, label, balance and fit the configured scorers"),
        ("score", "score every investigation window with the trained scorers"),
        ("eval", "compute precision/recall/coverage over stored scores"),
    ):
        cmd = sub.add_parser(name, help=doc)
        cmd.add_argument("--config", help="run config JSON file")
        cmd.add_argument("--corpus")
        cmd.add_argument("--failures")
        cmd.add_argument("--truth")
        cmd.add_argument("--out-dir")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--window-duration", type=float)
        cmd.add_argument(
            "--scorer", action="append", choices=["logrca", "tree"],
            help="scorer to use (repeatable)",
        )
        cmd.add_argument("--no-balance", action="store_true", help="skip cluster balancing")
        if name == "train":
            cmd.add_argument("--epochs", type=int)
            cmd.add_argument("--batch-size", type=int)
            cmd.add_argument("--learning-rate", type=float)
        if name == "eval":
            cmd.add_argument("--n", action="append", type=int, help="candidate count (repeatable)")

    srv = sub.add_parser("serve", help="HTTP API over scored windows for the investigation UI")
    srv.add_argument("--config", help="run config JSON file")
    srv.add_argument("--out-dir")
    srv.add_argument("--port", type=int, default=8765)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--ui-dir", help="directory of static UI assets")

    ins = sub.add_parser("inspect", help="print the balance report and training log")
    ins.add_argument("--config", help="run config JSON file")
    ins.add_argument("--out-dir")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for attr in ("corpus", "failures", "truth", "out_dir", "seed", "window_duration"):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[attr] = value
    if getattr(args, "scorer", None):
        overrides["scorers"] = tuple(dict.fromkeys(args.scorer))
    if getattr(args, "no_balance", False):
        overrides["balance_enabled"] = False
    if getattr(args, "n", None):
        overrides["eval_n"] = tuple(args.n)
    config = config.with_overrides(**overrides)
    model_overrides = {
        k: getattr(args, k)
        for k in ("epochs", "batch_size", "learning_rate")
        if getattr(args, k, None) is not None
    }
    if model_overrides:
        config = config.with_overrides(model=replace(config.model, **model_overrides))
    return config


def _cmd_gen(args) -> int:
    config = synthgen.PROFILES[args.profile](seed=args.seed)
    result = synthgen.generate(config, args.out_dir)
    print(json.dumps(result.stats, indent=2, sort_keys=True))
    print(f"corpus:   {result.corpus_path}")
    print(f"failures: {result.failures_path}")
    print(f"truth:    {result.truth_path}")
    return 0


def _cmd_train(args) -> int:
    config = _config_from_args(args)
    summary = pipeline.run_train(config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_score(args) -> int:
    config = _config_from_args(args)
    summary = pipeline.run_score(config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    config = _config_from_args(args)
    report = pipeline.run_eval(config)
    print(format_report_table(report))
    print(f"report written to {Path(config.out_dir) / EVAL_REPORT_FILE}")
    return 0


def _cmd_serve(args) -> int:
    out_dir = args.out_dir
    if args.config:
        out_dir = out_dir or RunConfig.from_file(args.config).out_dir
    if not out_dir:
        raise ConfigError("serve needs --out-dir or a config with one")
    httpd = server.make_server(out_dir, port=args.port, host=args.host, ui_dir=args.ui_dir)
    print(f"serving http://{args.host}:{args.port} (ctrl-c to stop)")
    server.serve_forever(httpd)
    return 0


def _cmd_inspect(args) -> int:
    out_dir = args.out_dir
    if args.config:
        out_dir = out_dir or RunConfig.from_file(args.config).out_dir
    if not out_dir:
        raise ConfigError("inspect needs --out-dir or a config with one")
    out = Path(out_dir)
    balance_path = out / BALANCE_REPORT_FILE
    if balance_path.is_file():
        report = read_json(balance_path)
        print("balance report:")
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print("no balance report")
    log_path = out / TRAINING_LOG_FILE
    if log_path.is_file():
        print("training log:")
        for raw in log_path.read_text(encoding="utf-8").splitlines():
            entry = json.loads(raw)
            print(f"  epoch {entry['epoch']}: mean_loss={entry['mean_loss']:.6f} "
                  f"({entry['wallclock_ms']} ms)")
    else:
        print("no training log")
    manifest_path = out / MANIFEST_FILE
    if manifest_path.is_file():
        manifest = read_json(manifest_path)
        print(f"manifest: config_hash={manifest['config_hash']} "
              f"({len(manifest['artifacts'])} artifacts)")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "score": _cmd_score,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "inspect": _cmd_inspect,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
