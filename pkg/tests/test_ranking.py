from __future__ import annotations

import numpy as np
import pytest

from logcause.errors import DataError
from logcause.ranking import (
    eval_report,
    format_report_table,
    full_coverage,
    precision_at,
    recall_at,
    select_top_n,
)
from logcause.scorer import ScoredLine

from conftest import make_corpus


def _scored(pairs):
    return [ScoredLine(line_id=i, score=s) for i, s in pairs]


def test_top_n_returns_time_order_not_score_order():
    scored = _scored([(0, 9.0), (1, 1.0), (2, 8.0), (3, 1.0), (4, 7.0)])
    ts = {i: 100 + i for i in range(5)}
    cands = select_top_n(scored, 3, ts)
    assert [c.line_id for c in cands.candidates] == [0, 2, 4]
    assert [c.timestamp for c in cands.candidates] == [100, 102, 104]


def test_top_n_larger_than_window():
    scored = _scored([(0, 1.0), (1, 5.0)])
    cands = select_top_n(scored, 10, {0: 10, 1: 20})
    assert [c.line_id for c in cands.candidates] == [0, 1]


def test_top_n_ties_prefer_earlier_timestamp():
    scored = _scored([(0, 2.0), (1, 2.0), (2, 2.0)])
    ts = {0: 300, 1: 100, 2: 200}
    cands = select_top_n(scored, 2, ts)
    assert [c.line_id for c in cands.candidates] == [1, 2]


def test_top_n_rejects_nonpositive_n():
    with pytest.raises(DataError):
        select_top_n(_scored([(0, 1.0)]), 0, {0: 1})


def test_top_n_matches_brute_force_oracle(rng):
    for _ in range(300):
        size = int(rng.integers(1, 60))
        n = int(rng.integers(1, 70))
        scores = rng.choice([0.1, 0.5, 0.9, 1.3, 2.0], size=size)  # force ties
        ts = {i: int(t) for i, t in enumerate(rng.integers(0, 50, size=size))}
        scored = _scored(list(enumerate(scores)))
        cands = select_top_n(scored, n, ts)
        # oracle: full sort by (-score, ts, id), take n, sort chronologically
        ranked = sorted(range(size), key=lambda i: (-scores[i], ts[i], i))
        expected = sorted(ranked[:n], key=lambda i: (ts[i], i))
        assert [c.line_id for c in cands.candidates] == expected
        stamps = [c.timestamp for c in cands.candidates]
        assert stamps == sorted(stamps)


def test_recall_monotone_in_n(rng):
    size = 40
    scores = rng.normal(0, 1, size)
    ts = {i: i for i in range(size)}
    truth = set(int(i) for i in rng.choice(size, size=10, replace=False))
    scored = _scored(list(enumerate(scores)))
    last = 0.0
    for n in (1, 2, 5, 10, 20, 40):
        r = recall_at(select_top_n(scored, n, ts), truth)
        assert r >= last
        last = r


def test_metric_examples():
    ts = {i: i for i in range(60)}
    truth = set(range(15))
    scored = _scored([(i, 100.0 - i) for i in range(60)])  # ids 0..9 win at n=10
    cands = select_top_n(scored, 10, ts)
    assert precision_at(cands, truth) == pytest.approx(1.0)
    assert recall_at(cands, truth) == pytest.approx(10 / 15, abs=1e-3)
    assert not full_coverage(cands, truth)

    small_truth = {0, 1, 2}
    assert full_coverage(cands, small_truth)

    disjoint = {50, 51}
    assert precision_at(cands, disjoint) == 0.0
    assert recall_at(cands, disjoint) == 0.0


def test_recall_rejects_empty_truth():
    cands = select_top_n(_scored([(0, 1.0)]), 1, {0: 0})
    with pytest.raises(DataError):
        recall_at(cands, set())


def _report_fixture():
    corpus = make_corpus([(float(i), "s", f"m{i}") for i in range(30)])
    runs = {
        "alpha": {0: _scored([(i, 30.0 - i) for i in range(10)]),
                  1: _scored([(10 + i, float(i)) for i in range(10)])},
    }
    truth = {0: {0, 1, 2}, 1: {19}}
    return corpus, runs, truth


def test_eval_report_single_window_averages():
    corpus, runs, truth = _report_fixture()
    report = eval_report(runs, truth, corpus, n_values=(3,))
    (row,) = report["rows"]
    assert row["scorer"] == "alpha" and row["n"] == 3
    # window 0: top3 = {0,1,2} all true; window 1: top3 = {17,18,19} hits {19}
    assert row["avg_precision"] == pytest.approx((1.0 + 1 / 3) / 2)
    assert row["avg_recall"] == pytest.approx((1.0 + 1.0) / 2)
    assert row["full_coverage_count"] == 2


def test_eval_report_identical_scorers_identical_rows():
    corpus, runs, truth = _report_fixture()
    both = {"alpha": runs["alpha"], "beta": runs["alpha"]}
    report = eval_report(both, truth, corpus, n_values=(3, 5))
    rows = {(r["scorer"], r["n"]): r for r in report["rows"]}
    for n in (3, 5):
        a, b = rows[("alpha", n)], rows[("beta", n)]
        assert a["avg_precision"] == b["avg_precision"]
        assert a["avg_recall"] == b["avg_recall"]
        assert a["full_coverage_count"] == b["full_coverage_count"]


def test_eval_report_excludes_truthless_windows(caplog):
    corpus, runs, truth = _report_fixture()
    del truth[1]
    with caplog.at_level("WARNING"):
        report = eval_report(runs, truth, corpus, n_values=(3,))
    (row,) = report["rows"]
    assert len(row["windows"]) == 1
    assert any("ground truth" in r.message for r in caplog.records)


def test_eval_report_marks_impossible_coverage():
    corpus = make_corpus([(float(i), "s", f"m{i}") for i in range(30)])
    runs = {"alpha": {0: _scored([(i, float(i)) for i in range(20)])}}
    truth = {0: set(range(10))}
    report = eval_report(runs, truth, corpus, n_values=(5,))
    window = report["rows"][0]["windows"][0]
    assert window["coverage_possible"] is False
    assert window["full_coverage"] is False


def test_eval_report_carries_reference_annotations():
    corpus, runs, truth = _report_fixture()
    report = eval_report(runs, truth, corpus, n_values=(3,))
    ref = report["reference"]
    assert ref["recall_at"] == {"10": 0.935, "20": 0.866, "50": 0.577}
    assert ref["full_coverage"]["covered"] == 65
    assert ref["full_coverage"]["windows"] == 80
    table = format_report_table(report)
    assert "alpha" in table and "reference" in table
