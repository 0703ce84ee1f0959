from __future__ import annotations

import numpy as np
import pytest

from logcause.corpus import FailureEvent, LogCorpus, LogLine

MICROS = 1_000_000


def make_corpus(specs) -> LogCorpus:
    """Corpus from (timestamp_seconds, service, content) triples, ids by position."""
    lines = [
        LogLine(id=i, timestamp=int(round(ts * MICROS)), service=svc, content=msg)
        for i, (ts, svc, msg) in enumerate(specs)
    ]
    return LogCorpus(lines)


def make_failures(times, labels=None) -> list[FailureEvent]:
    labels = labels or [None] * len(times)
    return [
        FailureEvent(id=i, timestamp=int(round(t * MICROS)), label=lbl)
        for i, (t, lbl) in enumerate(zip(times, labels))
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
