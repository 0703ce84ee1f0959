"""Deterministic multi-service log corpus with injected failure chains.

Stands in for production data: Poisson background traffic per service,
plus failure events whose root-cause template chains are planted inside the
pre-failure window at jittered offsets. The planted line ids are recorded as
ground truth. Emitted files use exactly the ingestion formats: corpus lines
sorted by timestamp so that the 0-based record index is the line id.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

BASE_EPOCH_US = 1_700_000_000 * 1_000_000
MICROS = 1_000_000

_COMPONENTS = [
    "auth", "billing", "cache", "catalog", "checkout", "dispatch", "gateway",
    "indexer", "inventory", "ledger", "mailer", "metrics", "notifier", "orders",
    "payments", "profiles", "quota", "registry", "router", "scheduler", "search",
    "sessions", "shipping", "storage", "telemetry", "uploader",
]
_NOUNS = [
    "request", "heartbeat", "lease", "snapshot", "segment", "batch", "cursor",
    "handle", "bucket", "queue", "replica", "shard", "token", "worker", "probe",
]
_VERBS = [
    "accepted", "acked", "committed", "completed", "dispatched", "flushed",
    "loaded", "refreshed", "registered", "resolved", "rotated", "scheduled",
    "served", "synced", "verified",
]
_FAIL_VERBS = [
    "aborted", "degraded", "deadlocked", "evicted", "exhausted", "rejected",
    "stalled", "throttled", "timed-out", "unreachable",
]

# Cause chains draw from the same fault shapes as ordinary degradation
# chatter, so every structural word and placeholder combination occurs in
# normal traffic too; after abstraction, the only token distinguishing a
# planted line is its per-step code value.
_FAULT_SHAPES = [
    "{noun} {failverb} on {noun} {num} code {code}",
    "{failverb} {noun} {num} code {code} at {hex}",
    "retry {noun} {failverb} {num} code {code}",
    "{noun} {failverb} peer {ip} code {code}",
    "{noun} {num} {failverb} in {num} ms code {code}",
    "worker {addr} {failverb} job {num} code {code}",
    "session {hex} {failverb} for client {num} code {code}",
]

_NORMAL_ONLY_SHAPES = [
    "{noun} {verb} in {num} ms",
    "{verb} {noun} {num} from {ip}",
    "{noun} pool at {smallnum} of {num} slots",
    "GET /v{smallnum}/{noun} -> status code {smallnum} took {num} ms",
    "cache {verb} key {hex} ttl {num} s",
    "worker {addr} {verb} job {num}",
    "{noun} {verb} peer {ip} port {num}",
    "gc pass {verb} {num} objects in {num} ms",
    "{noun} {num} {verb} checksum {hex}",
    "session {hex} {verb} for client {num}",
    "{noun} {verb} code {smallnum} in {num} ms",
    "{verb} {noun} at {num} qps on {noun} {num}",
]


@dataclass(frozen=True)
class CauseStep:
    service: str
    template: str
    offset: float  # seconds after window start, ascending within a chain


@dataclass(frozen=True)
class CauseSpec:
    """One root-cause type: a fixed template chain plus a frequency weight.

    ``noise_overlap`` is the fraction of chain templates that also occur in
    normal background traffic, which makes those lines ambiguous on purpose.
    ``burst`` multiplies the involved services' background rate inside the
    window (the error storm a failing subsystem produces); burst lines are
    ordinary templates and never part of the ground truth.
    """

    name: str
    weight: float
    steps: tuple[CauseStep, ...]
    noise_overlap: float = 0.0
    burst: float = 4.0

    def __post_init__(self):
        if not 3 <= len(self.steps) <= 50:
            raise DataError(f"cause {self.name!r}: chain length {len(self.steps)} outside [3, 50]")
        if len({s.service for s in self.steps}) > 5:
            raise DataError(f"cause {self.name!r}: chain spans more than 5 services")
        offsets = [s.offset for s in self.steps]
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise DataError(f"cause {self.name!r}: step offsets must be strictly ascending")
        if self.weight <= 0:
            raise DataError(f"cause {self.name!r}: weight must be positive")

    @property
    def overlap_count(self) -> int:
        return int(math.floor(self.noise_overlap * len(self.steps)))


@dataclass(frozen=True)
class GenConfig:
    services: int = 50
    normal_templates_per_service: int = 40
    duration: float = 1800.0  # simulated seconds
    base_rate: float = 2.2  # lines / second / service
    failures: int = 40
    window: float = 3.0  # seconds; chains are planted inside this span
    cause_types: tuple[CauseSpec, ...] = ()
    seed: int = 7

    def __post_init__(self):
        if len(self.cause_types) < 2:
            raise DataError("need at least two cause types")
        weights = [c.weight for c in self.cause_types]
        if min(weights) > 0.1 * max(weights):
            raise DataError("at least one cause must be rare (weight <= 10% of the most common)")
        if self.duration <= self.window * 2:
            raise DataError("duration too short for the failure window")


@dataclass
class GenResult:
    corpus_path: Path
    failures_path: Path
    truth_path: Path
    stats: dict = field(default_factory=dict)


def service_names(count: int) -> list[str]:
    """The service identifiers a corpus with ``count`` services will use."""
    names = []
    for i in range(count):
        names.append(f"{_COMPONENTS[i % len(_COMPONENTS)]}-{i // len(_COMPONENTS):02d}")
    return names


def _fill(template: str, rng: np.random.Generator) -> str:
    """Instantiate volatile slots; values are randomized per emission so the
    placeholder abstraction has real work to do."""
    out = template
    while "{num}" in out:
        out = out.replace("{num}", str(int(rng.integers(10, 99999))), 1)
    while "{smallnum}" in out:
        out = out.replace("{smallnum}", str(int(rng.integers(0, 10))), 1)
    while "{ip}" in out:
        octets = rng.integers(1, 255, size=4)
        out = out.replace("{ip}", ".".join(str(int(o)) for o in octets), 1)
    while "{hex}" in out:
        out = out.replace("{hex}", f"0x{int(rng.integers(1, 2**32)):08x}", 1)
    while "{addr}" in out:
        a, b = rng.choice(_NOUNS, size=2)
        out = out.replace("{addr}", f"@{a}.{b}", 1)
    return out


def _normal_template(rng: np.random.Generator) -> str:
    """Background template: mostly routine chatter, some benign fault noise.

    Benign fault lines reuse the cause shapes with single-digit codes, so no
    word or placeholder combination is unique to planted chains.
    """
    if rng.random() < 0.3:
        shape = _FAULT_SHAPES[int(rng.integers(len(_FAULT_SHAPES)))]
        shape = shape.replace("{code}", str(int(rng.integers(0, 10))))
    else:
        shape = _NORMAL_ONLY_SHAPES[int(rng.integers(len(_NORMAL_ONLY_SHAPES)))]
    return (
        shape.replace("{noun}", str(rng.choice(_NOUNS)))
        .replace("{verb}", str(rng.choice(_VERBS)))
        .replace("{failverb}", str(rng.choice(_FAIL_VERBS)))
    )


def build_cause_types(
    count: int,
    services: list[str],
    rng: np.random.Generator,
    window: float = 3.0,
    chain_lengths: list[int] | None = None,
    weights: list[float] | None = None,
    noise_overlaps: list[float] | None = None,
) -> tuple[CauseSpec, ...]:
    """Fabricate cause chains with distinctive per-step fault codes.

    Codes look like ``RC03-07``; the dash keeps them clear of the hex
    placeholder, so they survive abstraction as cause-identifying tokens.
    The last cause in the list is the rare one by default.
    """
    if chain_lengths is None:
        chain_lengths = [15, 22, 30, 12, 18, 20, 25, 14][:count]
    if weights is None:
        weights = [12.0, 8.0, 6.0, 4.0, 3.0, 1.0, 5.0, 2.0][:count]
        weights[count - 1] = 0.1 * max(weights[: count - 1] + [10.0])
    if noise_overlaps is None:
        # the rare (last) cause is heavily contested by design: without
        # upsampling, its overlapping templates drown in background traffic
        noise_overlaps = ([0.1, 0.0, 0.15, 0.0, 0.05, 0.1, 0.0, 0.05] * 2)[:count]
        noise_overlaps[count - 1] = 0.45
    causes = []
    for ci in range(count):
        length = chain_lengths[ci % len(chain_lengths)]
        involved = rng.choice(services, size=int(rng.integers(1, 6)), replace=True)
        lo, hi = 0.08 * window, 0.95 * window
        offsets = np.linspace(lo, hi, num=length)
        steps = []
        for si in range(length):
            shape = _FAULT_SHAPES[int(rng.integers(len(_FAULT_SHAPES)))]
            template = (
                shape.replace("{noun}", str(rng.choice(_NOUNS)))
                .replace("{verb}", str(rng.choice(_VERBS)))
                .replace("{failverb}", str(rng.choice(_FAIL_VERBS)))
                .replace("{code}", f"RC{ci:02d}-{si:02d}")
            )
            steps.append(
                CauseStep(
                    service=str(involved[int(rng.integers(len(involved)))]),
                    template=template,
                    offset=float(offsets[si]),
                )
            )
        causes.append(
            CauseSpec(
                name=f"cause-{ci:02d}",
                weight=float(weights[ci]),
                steps=tuple(steps),
                noise_overlap=float(noise_overlaps[ci]),
            )
        )
    return tuple(causes)


def small_profile(seed: int = 7) -> GenConfig:
    """~200k lines, 40 failures, 6 cause types incl. one rare."""
    rng = np.random.default_rng(seed ^ 0x5EED)
    services = service_names(50)
    causes = build_cause_types(6, services, rng)
    return GenConfig(
        services=50, normal_templates_per_service=40, duration=1800.0,
        base_rate=2.2, failures=40, cause_types=causes, seed=seed,
    )


def medium_profile(seed: int = 7) -> GenConfig:
    """~1M lines, 80 failures, 8 cause types incl. one rare."""
    rng = np.random.default_rng(seed ^ 0x5EED)
    services = service_names(100)
    causes = build_cause_types(8, services, rng)
    return GenConfig(
        services=100, normal_templates_per_service=40, duration=3600.0,
        base_rate=2.8, failures=80, cause_types=causes, seed=seed,
    )


PROFILES = {"small": small_profile, "medium": medium_profile}


def _allocate_causes(config: GenConfig, rng: np.random.Generator) -> list[int]:
    """Cause index per failure by largest-remainder quota, then shuffled.

    Quotas make the per-cause counts track the weights exactly (+-1), so every
    cause with a meaningful share is guaranteed to occur; placement stays
    random.
    """
    weights = np.array([c.weight for c in config.cause_types], dtype=np.float64)
    quota = config.failures * weights / weights.sum()
    counts = np.floor(quota).astype(int)
    remainder = config.failures - int(counts.sum())
    if remainder > 0:
        order = np.argsort(-(quota - counts), kind="stable")
        for i in order[:remainder]:
            counts[i] += 1
    # every cause occurs when there are enough failures to go around
    if config.failures >= len(counts):
        for i in range(len(counts)):
            if counts[i] == 0:
                counts[int(np.argmax(counts))] -= 1
                counts[i] += 1
    assignment = [ci for ci, c in enumerate(counts) for _ in range(c)]
    return [int(i) for i in rng.permutation(assignment)]


def generate(config: GenConfig, out_dir: str | Path) -> GenResult:
    """Write corpus.jsonl, failures.jsonl and truth.jsonl under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    services = service_names(config.services)
    known = set(services)
    for cause in config.cause_types:
        missing = {s.service for s in cause.steps} - known
        if missing:
            raise DataError(
                f"cause {cause.name!r} references services absent from a "
                f"{config.services}-service corpus: {sorted(missing)}"
            )

    # per-service background template pools, plus overlapping cause templates
    pools: dict[str, list[str]] = {
        s: [_normal_template(rng) for _ in range(config.normal_templates_per_service)]
        for s in services
    }
    for cause in config.cause_types:
        for step in cause.steps[: cause.overlap_count]:
            pools[step.service].append(step.template)

    records: list[tuple[int, str, str, str]] = []  # (ts_us, service, msg, severity)

    for service in services:
        n = int(rng.poisson(config.base_rate * config.duration))
        ts = np.sort(rng.uniform(0.0, config.duration, size=n))
        pool = pools[service]
        picks = rng.integers(0, len(pool), size=n)
        sev = rng.choice(["INFO", "DEBUG", "WARN"], size=n, p=[0.8, 0.15, 0.05])
        for t, pick, severity in zip(ts, picks, sev):
            records.append(
                (BASE_EPOCH_US + int(t * MICROS), service, _fill(pool[pick], rng), str(severity))
            )

    # failures on a jittered grid so windows never overlap at default settings
    slot = config.duration / config.failures
    cause_per_failure = _allocate_causes(config, rng)
    failure_rows = []
    planted: list[list[int]] = []  # per failure: indices into records
    for fi in range(config.failures):
        center = (fi + 0.5) * slot
        t_f = center + float(rng.uniform(-0.1, 0.1)) * slot
        t_f = min(max(t_f, config.window * 1.05), config.duration - 0.01)
        cause = config.cause_types[cause_per_failure[fi]]
        t_f_us = BASE_EPOCH_US + int(t_f * MICROS)
        failure_rows.append({"ts": t_f_us, "label": cause.name})

        gaps = [b.offset - a.offset for a, b in zip(cause.steps, cause.steps[1:])]
        jitter_bound = min(gaps) / 2.5 if gaps else 0.05
        chain_shift = float(rng.uniform(-0.02, 0.02)) * config.window
        indices = []
        for step in cause.steps:
            delta = float(rng.uniform(-jitter_bound, jitter_bound))
            offset = min(max(step.offset + chain_shift + delta, 0.0), config.window - 1e-4)
            ts_us = t_f_us - int(round((config.window - offset) * MICROS))
            indices.append(len(records))
            records.append((ts_us, step.service, _fill(step.template, rng), "ERROR"))
        planted.append(indices)

        # error storm: involved services chatter harder inside the window
        if cause.burst > 1.0:
            for service in sorted({s.service for s in cause.steps}):
                extra = int(rng.poisson((cause.burst - 1.0) * config.base_rate * config.window))
                offsets = rng.uniform(0.0, config.window - 1e-4, size=extra)
                pool = pools[service]
                picks = rng.integers(0, len(pool), size=extra)
                for off, pick in zip(offsets, picks):
                    ts_us = t_f_us - int(round((config.window - off) * MICROS))
                    records.append((ts_us, service, _fill(pool[pick], rng), "WARN"))
        # the failure-marking line itself sits at t_f, outside the half-open window
        records.append((t_f_us, cause.steps[-1].service, "client session lost: forced disconnect", "ERROR"))

    order = sorted(range(len(records)), key=lambda i: (records[i][0], i))
    position = {orig: pos for pos, orig in enumerate(order)}

    corpus_path = out / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for orig in order:
            ts_us, service, msg, severity = records[orig]
            fh.write(json.dumps(
                {"ts": ts_us, "service": service, "msg": msg, "severity": severity},
                separators=(",", ":"),
            ) + "\n")

    failures_path = out / "failures.jsonl"
    with open(failures_path, "w", encoding="utf-8") as fh:
        for row in failure_rows:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")

    truth_path = out / "truth.jsonl"
    with open(truth_path, "w", encoding="utf-8") as fh:
        for fi, indices in enumerate(planted):
            line_ids = sorted(position[i] for i in indices)
            fh.write(json.dumps({"failure_id": fi, "line_ids": line_ids}, separators=(",", ":")) + "\n")

    # sanity: a window with no lines at all would break evaluation downstream
    ts_sorted = [records[i][0] for i in order]
    for fi, row in enumerate(failure_rows):
        start = row["ts"] - int(config.window * MICROS)
        lo = int(np.searchsorted(ts_sorted, start, side="left"))
        hi = int(np.searchsorted(ts_sorted, row["ts"], side="left"))
        if hi <= lo:
            raise DataError(f"generated window {fi} is empty; raise base_rate or shrink duration")

    cause_counts: dict[str, int] = {}
    for row in failure_rows:
        cause_counts[row["label"]] = cause_counts.get(row["label"], 0) + 1
    return GenResult(
        corpus_path=corpus_path,
        failures_path=failures_path,
        truth_path=truth_path,
        stats={
            "lines": len(records),
            "failures": config.failures,
            "services": config.services,
            "cause_counts": dict(sorted(cause_counts.items())),
            "planted_lines": sum(len(p) for p in planted),
        },
    )
