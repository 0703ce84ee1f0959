"""Log data model: ingestion, investigation windows, and PU label assignment.

A corpus is an immutable, timestamp-sorted list of log lines. Each failure
event opens an investigation window covering a fixed interval immediately
before it; every line inside any window lands in the unknown class U, every
other line in the positive class P.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

MICROS = 1_000_000


@dataclass(frozen=True, slots=True)
class LogLine:
    """One log event. ``id`` is the 0-based record index in the source file."""

    id: int
    timestamp: int  # microseconds since epoch
    service: str
    content: str
    severity: str | None = None


@dataclass(frozen=True, slots=True)
class FailureEvent:
    id: int
    timestamp: int  # microseconds since epoch
    label: str | None = None  # ground-truth cause name, evaluation only


@dataclass(slots=True)
class InvestigationWindow:
    """All lines in ``[failure.timestamp - duration, failure.timestamp)``.

    ``ground_truth`` rides along for evaluation and is never consumed by any
    training path.
    """

    failure_id: int
    duration: float  # seconds
    line_ids: list[int] = field(default_factory=list)
    ground_truth: set[int] | None = None

    def __len__(self) -> int:
        return len(self.line_ids)


@dataclass(frozen=True)
class PUDataset:
    """Global P/U partition of a corpus. Immutable once built.

    ``labels`` maps line id to the inaccurate label: 0 for P, 1 for U.
    ``q`` is |P| / (|P| + |U|).
    """

    positives: frozenset[int]
    unknowns: frozenset[int]
    q: float

    def label(self, line_id: int) -> int:
        return 1 if line_id in self.unknowns else 0

    @property
    def labels(self) -> dict[int, int]:
        out = {i: 0 for i in self.positives}
        out.update((i, 1) for i in self.unknowns)
        return out

    def to_json(self) -> str:
        """Canonical serialization; byte-identical for identical inputs."""
        payload = {
            "positives": sorted(self.positives),
            "unknowns": sorted(self.unknowns),
            "q": self.q,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


class LogCorpus:
    """Timestamp-sorted log lines with O(log n) interval lookup."""

    def __init__(self, lines: Sequence[LogLine], dropped_empty: int = 0):
        self.lines: list[LogLine] = sorted(lines, key=lambda l: (l.timestamp, l.id))
        self.dropped_empty = dropped_empty
        self._ts = np.array([l.timestamp for l in self.lines], dtype=np.int64)
        self._by_id = {l.id: l for l in self.lines}
        seen_ids = self._by_id.keys()
        if len(seen_ids) != len(self.lines):
            raise DataError("duplicate line ids in corpus")

    def __len__(self) -> int:
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    def get(self, line_id: int) -> LogLine:
        return self._by_id[line_id]

    def services(self) -> list[str]:
        """Unique service names, sorted for deterministic indexing."""
        return sorted({l.service for l in self.lines})

    def slice_interval(self, start_us: int, end_us: int) -> list[LogLine]:
        """Lines with timestamp in the half-open interval [start_us, end_us)."""
        lo = int(np.searchsorted(self._ts, start_us, side="left"))
        hi = int(np.searchsorted(self._ts, end_us, side="left"))
        return self.lines[lo:hi]


def parse_timestamp(value) -> int:
    """Accept integer microseconds or an RFC3339 string; return microseconds."""
    if isinstance(value, bool):
        raise DataError(f"invalid timestamp: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return int(round(value))
    if isinstance(value, str):
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError as exc:
            raise DataError(f"invalid timestamp: {value!r}") from exc
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(round(dt.timestamp() * MICROS))
    raise DataError(f"invalid timestamp: {value!r}")


def _read_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for idx, raw in enumerate(fh):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{idx + 1}: invalid JSON") from exc
            yield idx, obj


def load_corpus(path: str | Path) -> LogCorpus:
    """Ingest a JSONL corpus (fields ``ts``, ``service``, ``msg``, optional ``severity``).

    Line ids are the 0-based record index in the file; records whose message is
    empty after trimming are dropped with a counted warning but still consume
    their index, so ids stay aligned with the file.
    """
    lines: list[LogLine] = []
    dropped = 0
    for idx, obj in _read_jsonl(path):
        try:
            ts = parse_timestamp(obj["ts"])
            service = str(obj["service"])
            content = str(obj["msg"])
        except KeyError as exc:
            raise DataError(f"{path}:{idx + 1}: missing field {exc}") from exc
        if not content.strip():
            dropped += 1
            continue
        lines.append(
            LogLine(
                id=idx,
                timestamp=ts,
                service=service,
                content=content,
                severity=obj.get("severity"),
            )
        )
    if dropped:
        logger.warning("dropped %d empty-content lines at ingestion", dropped)
    return LogCorpus(lines, dropped_empty=dropped)


def load_failures(path: str | Path) -> list[FailureEvent]:
    """Ingest a JSONL failure list (fields ``ts``, optional ``label``).

    Failures are sorted by timestamp; ids are assigned by file order, so a file
    already sorted ascending keeps id == position.
    """
    events = []
    for idx, obj in _read_jsonl(path):
        if "ts" not in obj:
            raise DataError(f"{path}:{idx + 1}: missing field 'ts'")
        events.append(FailureEvent(id=idx, timestamp=parse_timestamp(obj["ts"]), label=obj.get("label")))
    events.sort(key=lambda e: (e.timestamp, e.id))
    for a, b in zip(events, events[1:]):
        if a.timestamp == b.timestamp:
            raise DataError(f"failures {a.id} and {b.id} share timestamp {a.timestamp}")
    return events


def load_truth(path: str | Path) -> dict[int, set[int]]:
    """Ingest ground truth as a map failure_id -> set of root-cause line ids."""
    truth: dict[int, set[int]] = {}
    for idx, obj in _read_jsonl(path):
        try:
            truth[int(obj["failure_id"])] = {int(i) for i in obj["line_ids"]}
        except KeyError as exc:
            raise DataError(f"{path}:{idx + 1}: missing field {exc}") from exc
    return truth


def extract_windows(
    corpus: LogCorpus,
    failures: Sequence[FailureEvent],
    duration: float = 3.0,
    truth: dict[int, set[int]] | None = None,
) -> list[InvestigationWindow]:
    """One window per failure, covering [t_f - duration, t_f).

    The half-open interval excludes the failure-marking line itself: the
    indicator is the trigger, not a candidate. Windows may overlap in time;
    shared lines appear in every covering window. Empty windows are retained
    (with a warning) so evaluation counts them as misses.
    """
    if duration <= 0:
        raise DataError(f"window duration must be positive, got {duration}")
    windows = []
    for failure in failures:
        start = failure.timestamp - int(round(duration * MICROS))
        members = corpus.slice_interval(start, failure.timestamp)
        window = InvestigationWindow(
            failure_id=failure.id,
            duration=duration,
            line_ids=[l.id for l in members],
        )
        if truth is not None and failure.id in truth:
            extra = truth[failure.id] - set(window.line_ids)
            if extra:
                raise DataError(
                    f"ground truth for failure {failure.id} references {len(extra)} "
                    f"lines outside its window"
                )
            window.ground_truth = set(truth[failure.id])
        if not window.line_ids:
            logger.warning("window for failure %d is empty", failure.id)
        windows.append(window)
    return windows


def assign_pu_labels(corpus: LogCorpus, windows: Sequence[InvestigationWindow]) -> PUDataset:
    """Partition the corpus: lines inside any window -> U, all others -> P.

    A line covered by several overlapping windows carries a single global U
    label. Both classes must be non-empty or training is impossible.
    """
    unknowns: set[int] = set()
    for window in windows:
        unknowns.update(window.line_ids)
    if not unknowns:
        raise DataError("no lines fall inside any investigation window (|U| = 0)")
    positives = {l.id for l in corpus} - unknowns
    if not positives:
        raise DataError("every line falls inside an investigation window (|P| = 0)")
    q = len(positives) / (len(positives) + len(unknowns))
    return PUDataset(positives=frozenset(positives), unknowns=frozenset(unknowns), q=q)
