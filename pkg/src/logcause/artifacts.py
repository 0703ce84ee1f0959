"""Run configuration, artifact layout, and the reproducibility manifest.

Every pipeline stage reads one RunConfig (JSON file, flag-overridable) and
writes its outputs under ``out_dir``. The manifest records the tool version,
the hash of the effective config, and a sha256 per deterministic artifact,
so identical configs over identical inputs can be checked byte-for-byte.
The training log is listed but not hashed: it contains wallclock times.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .scorer import ModelConfig
from .tokenizer import TokenizerConfig

TOOL_VERSION = "0.1.0"
SCORER_NAMES = ("logrca", "tree")

VOCAB_FILE = "vocab.json"
CHECKPOINT_FILE = "checkpoint.lrca"
TREE_MODEL_FILE = "tree_model.json"
BALANCE_REPORT_FILE = "balance_report.json"
TRAINING_LOG_FILE = "training_log.jsonl"
EVAL_REPORT_FILE = "eval_report.json"
MANIFEST_FILE = "manifest.json"
WINDOWS_DIR = "windows"
SCORES_DIR = "scores"

_UNHASHED = {MANIFEST_FILE, TRAINING_LOG_FILE}


@dataclass(frozen=True)
class RunConfig:
    corpus: str = ""
    failures: str = ""
    truth: str | None = None
    out_dir: str = "run"
    window_duration: float = 3.0
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    balance_enabled: bool = True
    birch_branching: int = 50
    birch_threshold: float = 0.5
    scorers: tuple[str, ...] = ("logrca",)
    eval_n: tuple[int, ...] = (10, 20, 50)
    vocab_min_count: int = 1
    seed: int = 7

    def __post_init__(self):
        for name in self.scorers:
            if name not in SCORER_NAMES:
                raise ConfigError(f"unknown scorer {name!r}; choose from {SCORER_NAMES}")
        if self.window_duration <= 0:
            raise ConfigError("window_duration must be positive")
        if any(n < 1 for n in self.eval_n):
            raise ConfigError("eval_n values must be >= 1")

    def to_dict(self) -> dict:
        return {
            "corpus": self.corpus,
            "failures": self.failures,
            "truth": self.truth,
            "out_dir": self.out_dir,
            "window_duration": self.window_duration,
            "tokenizer": self.tokenizer.to_dict(),
            "model": self.model.to_dict(),
            "balance": {
                "enabled": self.balance_enabled,
                "branching": self.birch_branching,
                "threshold": self.birch_threshold,
            },
            "scorers": list(self.scorers),
            "eval_n": list(self.eval_n),
            "vocab_min_count": self.vocab_min_count,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        balance = data.pop("balance", {})
        try:
            return cls(
                corpus=data.get("corpus", ""),
                failures=data.get("failures", ""),
                truth=data.get("truth"),
                out_dir=data.get("out_dir", "run"),
                window_duration=data.get("window_duration", 3.0),
                tokenizer=TokenizerConfig.from_dict(data.get("tokenizer", {})),
                model=ModelConfig.from_dict(data.get("model", {})),
                balance_enabled=balance.get("enabled", True),
                birch_branching=balance.get("branching", 50),
                birch_threshold=balance.get("threshold", 0.5),
                scorers=tuple(data.get("scorers", ("logrca",))),
                eval_n=tuple(data.get("eval_n", (10, 20, 50))),
                vocab_min_count=data.get("vocab_min_count", 1),
                seed=data.get("seed", 7),
            )
        except TypeError as exc:
            raise ConfigError(f"bad run config: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def with_overrides(self, **kwargs) -> "RunConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8")


def read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def write_manifest(config: RunConfig) -> dict:
    """Hash every deterministic artifact under out_dir and persist the manifest."""
    out = Path(config.out_dir)
    artifacts = {}
    logs = []
    for path in sorted(out.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(out).as_posix()
        if rel in _UNHASHED:
            if rel != MANIFEST_FILE:
                logs.append(rel)
            continue
        artifacts[rel] = sha256_file(path)
    manifest = {
        "tool": "logcause",
        "version": TOOL_VERSION,
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "artifacts": artifacts,
        "logs": logs,
    }
    write_json(out / MANIFEST_FILE, manifest)
    return manifest
