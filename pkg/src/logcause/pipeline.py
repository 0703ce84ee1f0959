"""Pipeline stages behind the CLI: train, score, eval.

Each stage re-ingests its inputs from the paths in the run config, performs
one well-defined step, writes artifacts under ``out_dir``, and refreshes the
manifest. Stages are deterministic for a fixed config and fixed inputs.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from . import balance as bal
from . import baseline, ranking, scorer
from .artifacts import (
    BALANCE_REPORT_FILE,
    CHECKPOINT_FILE,
    EVAL_REPORT_FILE,
    SCORES_DIR,
    TRAINING_LOG_FILE,
    TREE_MODEL_FILE,
    VOCAB_FILE,
    WINDOWS_DIR,
    RunConfig,
    read_json,
    write_json,
    write_manifest,
)
from .corpus import LogCorpus, extract_windows, assign_pu_labels, load_corpus, load_failures, load_truth
from .errors import ConfigError, DataError
from .tokenizer import Vocabulary, build_vocab, tokenize

logger = logging.getLogger(__name__)


def _require_inputs(config: RunConfig, need_truth: bool = False) -> None:
    for label, path in (("corpus", config.corpus), ("failures", config.failures)):
        if not path:
            raise ConfigError(f"config is missing the {label} path")
        if not Path(path).is_file():
            raise DataError(f"{label} file not found: {path}")
    if need_truth:
        if not config.truth:
            raise ConfigError("evaluation requires a truth path in the config")
        if not Path(config.truth).is_file():
            raise DataError(f"truth file not found: {config.truth}")


def _ingest(config: RunConfig):
    corpus = load_corpus(config.corpus)
    failures = load_failures(config.failures)
    windows = extract_windows(corpus, failures, duration=config.window_duration)
    return corpus, failures, windows


def _balanced_dataset(config: RunConfig, corpus: LogCorpus, windows, dataset):
    """Cluster windows and upsample rare clusters; returns (balanced, report)."""
    if not config.balance_enabled:
        return bal.unbalanced(dataset), {"enabled": False}
    index = bal.build_service_index(corpus.services())
    vectors = [bal.service_vector(w, corpus, index) for w in windows]
    assignment = bal.birch_cluster(
        vectors, branching=config.birch_branching, threshold=config.birch_threshold
    )
    pools = bal.cluster_line_pools(assignment, windows)
    counts = {cid: len(pool) for cid, pool in pools.items() if cid != bal.EMPTY_CLUSTER and pool}
    if not counts:
        raise DataError("balancing found no non-empty clusters")
    plan = bal.target_sizes(counts)
    balanced = bal.apply_balance(dataset, pools, plan, seed=config.seed)
    report = dict(bal.balance_report(assignment, pools, plan), enabled=True)
    report["unknown_multiset_size"] = len(balanced.unknown_multiset)
    report["q"] = balanced.q
    return balanced, report


def run_train(config: RunConfig) -> dict:
    """Tokenize, label, balance, fit every configured scorer, write artifacts."""
    _require_inputs(config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus, failures, windows = _ingest(config)
    dataset = assign_pu_labels(corpus, windows)
    logger.info(
        "corpus: %d lines, %d windows, |P|=%d |U|=%d q=%.4f",
        len(corpus), len(windows), len(dataset.positives), len(dataset.unknowns), dataset.q,
    )

    vocab = build_vocab(
        (tokenize(line.content, config.tokenizer, origin=line.id) for line in corpus),
        min_count=config.vocab_min_count,
    )
    vocab.save(out / VOCAB_FILE)

    balanced, report = _balanced_dataset(config, corpus, windows, dataset)
    write_json(out / BALANCE_REPORT_FILE, report)

    summary = {"vocab_size": len(vocab), "q": balanced.q, "scorers": {}}
    if "logrca" in config.scorers:
        model, log = scorer.train(balanced, corpus, vocab, config.tokenizer, config.model)
        model.save(out / CHECKPOINT_FILE)
        with open(out / TRAINING_LOG_FILE, "w", encoding="utf-8") as fh:
            for entry in log:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
        summary["scorers"]["logrca"] = {"final_loss": log[-1]["mean_loss"] if log else None}
    if "tree" in config.scorers:
        tree_model = baseline.train_tree_scorer(balanced, corpus, config.tokenizer)
        tree_model.save(out / TREE_MODEL_FILE)
        summary["scorers"]["tree"] = {"depth": tree_model.tree.depth}
    write_manifest(config)
    return summary


def _window_doc(window, corpus: LogCorpus, failure, truth) -> dict:
    return {
        "window_id": window.failure_id,
        "failure_ts": failure.timestamp,
        "duration": window.duration,
        "size": len(window.line_ids),
        "has_truth": truth is not None,
        "truth": sorted(truth) if truth is not None else None,
        "lines": [
            {
                "id": line.id,
                "ts": line.timestamp,
                "service": line.service,
                "msg": line.content,
                "severity": line.severity,
            }
            for line in (corpus.get(i) for i in window.line_ids)
        ],
    }


def _load_scorer_fn(name: str, out: Path, config: RunConfig):
    """Content-scoring function for a trained scorer's persisted artifacts."""
    if name == "logrca":
        checkpoint = out / CHECKPOINT_FILE
        if not checkpoint.is_file():
            raise DataError(f"no checkpoint at {checkpoint}; run train first")
        model = scorer.ScorerModel.load(checkpoint)
        vocab = Vocabulary.load(out / VOCAB_FILE)
        return lambda contents: scorer.score_contents(model, contents, vocab, config.tokenizer)
    tree_path = out / TREE_MODEL_FILE
    if not tree_path.is_file():
        raise DataError(f"no tree model at {tree_path}; run train first")
    return baseline.TreeScorerModel.load(tree_path).score_contents


def run_score(config: RunConfig) -> dict:
    """Score every window with every configured scorer; write window and score docs."""
    _require_inputs(config)
    out = Path(config.out_dir)
    corpus, failures, windows = _ingest(config)
    truth = load_truth(config.truth) if config.truth and Path(config.truth).is_file() else {}
    failure_by_id = {f.id: f for f in failures}

    windows_dir = out / WINDOWS_DIR
    windows_dir.mkdir(parents=True, exist_ok=True)
    for window in windows:
        doc = _window_doc(window, corpus, failure_by_id[window.failure_id], truth.get(window.failure_id))
        write_json(windows_dir / f"window_{window.failure_id}.json", doc)

    scored_counts = {}
    for name in config.scorers:
        score_fn = _load_scorer_fn(name, out, config)
        scores_dir = out / SCORES_DIR / name
        scores_dir.mkdir(parents=True, exist_ok=True)
        total = 0
        for window in windows:
            contents = [corpus.get(i).content for i in window.line_ids]
            values = score_fn(contents)
            doc = {
                "window_id": window.failure_id,
                "scorer": name,
                "scores": [[int(i), float(v)] for i, v in zip(window.line_ids, values)],
            }
            write_json(scores_dir / f"window_{window.failure_id}.json", doc)
            total += len(window.line_ids)
        scored_counts[name] = total
    write_manifest(config)
    return {"windows": len(windows), "scored_lines": scored_counts}


def load_scores(out_dir: str | Path, scorer_name: str) -> dict[int, list[scorer.ScoredLine]]:
    scores_dir = Path(out_dir) / SCORES_DIR / scorer_name
    if not scores_dir.is_dir():
        raise DataError(f"no scores for scorer {scorer_name!r} under {scores_dir}")
    runs: dict[int, list[scorer.ScoredLine]] = {}
    for path in sorted(scores_dir.glob("window_*.json")):
        doc = read_json(path)
        runs[doc["window_id"]] = [
            scorer.ScoredLine(line_id=i, score=v) for i, v in doc["scores"]
        ]
    return runs


def run_eval(config: RunConfig) -> dict:
    """Aggregate precision/recall/coverage over stored scores; write the report."""
    _require_inputs(config, need_truth=True)
    out = Path(config.out_dir)
    corpus = load_corpus(config.corpus)
    truth = load_truth(config.truth)
    window_runs = {name: load_scores(out, name) for name in config.scorers}
    report = ranking.eval_report(window_runs, truth, corpus, n_values=config.eval_n)
    write_json(out / EVAL_REPORT_FILE, report)
    write_manifest(config)
    return report
