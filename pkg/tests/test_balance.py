from __future__ import annotations

import math

import numpy as np
import pytest

from logcause.balance import (
    EMPTY_CLUSTER,
    BirchTree,
    ServiceVector,
    apply_balance,
    birch_cluster,
    cluster_line_pools,
    service_vector,
    target_sizes,
    unbalanced,
)
from logcause.corpus import InvestigationWindow, assign_pu_labels, extract_windows
from logcause.errors import DataError

from conftest import make_corpus, make_failures


def _window(wid, line_ids):
    return InvestigationWindow(failure_id=wid, duration=3.0, line_ids=list(line_ids))


def test_service_vector_counts_then_normalizes():
    corpus = make_corpus([(1.0, "a", "x"), (1.1, "a", "y"), (1.2, "b", "z")])
    index = {"a": 0, "b": 1, "c": 2}
    vec = service_vector(_window(0, [0, 1, 2]), corpus, index)
    expected = np.array([2.0, 1.0, 0.0]) / math.sqrt(5.0)
    assert np.allclose(vec.values, expected)
    assert vec.values[0] == pytest.approx(0.894, abs=1e-3)
    assert vec.values[1] == pytest.approx(0.447, abs=1e-3)


def test_service_vector_empty_window_is_zero():
    corpus = make_corpus([(1.0, "a", "x")])
    vec = service_vector(_window(0, []), corpus, {"a": 0, "b": 1})
    assert not np.any(vec.values)


def test_service_vector_single_service_is_basis():
    corpus = make_corpus([(1.0, "b", "x"), (1.1, "b", "y")])
    vec = service_vector(_window(0, [0, 1]), corpus, {"a": 0, "b": 1})
    assert np.allclose(vec.values, [0.0, 1.0])


def test_service_vector_unknown_service_is_error():
    corpus = make_corpus([(1.0, "mystery", "x")])
    with pytest.raises(DataError):
        service_vector(_window(0, [0]), corpus, {"a": 0})


def test_birch_identical_vectors_one_cluster():
    vecs = [ServiceVector(i, np.array([0.0, 1.0, 0.0])) for i in range(25)]
    assignment = birch_cluster(vecs, branching=50, threshold=0.5)
    assert len(assignment.cluster_windows) == 1
    assert set(assignment.window_to_cluster.values()) == {0}


def test_birch_orthogonal_groups_split():
    # interleaved insertion order: even ids on e1, odd ids on e2
    vecs = [
        ServiceVector(i, np.array([1.0, 0.0]) if i % 2 == 0 else np.array([0.0, 1.0]))
        for i in range(20)
    ]
    assignment = birch_cluster(vecs, branching=50, threshold=0.5)
    assert len(assignment.cluster_windows) == 2
    for cid, wids in assignment.cluster_windows.items():
        assert len({w % 2 for w in wids}) == 1  # clusters are pure


def _kmeans_oracle(points, k, iters=50):
    centers = points[:k].copy()
    labels = np.zeros(len(points), dtype=int)
    for _ in range(iters):
        dists = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
        labels = dists.argmin(axis=1)
        for j in range(k):
            if np.any(labels == j):
                centers[j] = points[labels == j].mean(axis=0)
    return labels


def test_birch_three_blobs_match_kmeans_partition(rng):
    centers = np.eye(3)
    points, true = [], []
    for i in range(90):
        c = i % 3
        v = np.abs(centers[c] + rng.normal(0, 0.02, 3))
        points.append(v / np.linalg.norm(v))
        true.append(c)
    points = np.array(points)
    assignment = birch_cluster([ServiceVector(i, p) for i, p in enumerate(points)])
    assert len(assignment.cluster_windows) == 3
    km = _kmeans_oracle(points, k=3)
    # same partition regardless of label naming
    birch_groups = {frozenset(w) for w in assignment.cluster_windows.values()}
    km_groups = {frozenset(np.flatnonzero(km == j).tolist()) for j in range(3)}
    assert birch_groups == km_groups


def test_birch_cf_stats_match_brute_force(rng):
    for trial in range(30):
        n = int(rng.integers(5, 200))
        dim = int(rng.integers(2, 8))
        points = rng.normal(0, 1, (n, dim))
        tree = BirchTree(branching=int(rng.integers(3, 12)), threshold=float(rng.uniform(0.3, 2.0)))
        for i in range(n):
            tree.insert(points[i], i)
        subs = tree.leaf_subclusters()
        assert sorted(m for s in subs for m in s.members) == list(range(n))
        for sub in subs:
            members = points[sub.members]
            assert sub.n == len(sub.members)
            assert np.allclose(sub.ls, members.sum(axis=0))
            assert np.isclose(sub.ss, float((members**2).sum()))


def test_birch_radius_rejects_inflation():
    # a subcluster of two opposite points would have RMS radius 1 > T
    tree = BirchTree(branching=50, threshold=0.5)
    tree.insert(np.array([1.0, 0.0]), 0)
    tree.insert(np.array([-1.0, 0.0]), 1)
    assert len(tree.leaf_subclusters()) == 2


def test_empty_windows_form_reserved_cluster():
    vecs = [
        ServiceVector(0, np.array([1.0, 0.0])),
        ServiceVector(1, np.zeros(2)),
        ServiceVector(2, np.zeros(2)),
    ]
    assignment = birch_cluster(vecs)
    assert assignment.window_to_cluster[1] == EMPTY_CLUSTER
    assert assignment.window_to_cluster[2] == EMPTY_CLUSTER
    assert assignment.cluster_windows[EMPTY_CLUSTER] == [1, 2]


def test_target_sizes_endpoints():
    plan = target_sizes({0: 100, 1: 1000})
    assert plan.entries[0] == (100, 500)
    assert plan.entries[1] == (1000, 1000)


def test_target_sizes_interior_point():
    plan = target_sizes({0: 100, 1: 400, 2: 1000})
    assert plan.target(1) == 667  # (300/900)*500 + 500, rounded


def test_target_sizes_degenerate_equal_counts():
    plan = target_sizes({0: 800, 1: 800})
    assert plan.entries == {0: (800, 800), 1: (800, 800)}


def test_target_sizes_single_cluster_unchanged():
    assert target_sizes({5: 123}).entries == {5: (123, 123)}


def test_target_bounds_and_monotonicity(rng):
    for _ in range(300):
        k = int(rng.integers(1, 12))
        counts = {i: int(rng.integers(1, 10_000)) for i in range(k)}
        plan = target_sizes(counts)
        mx = max(counts.values())
        lo = mx / 2
        for cid, (count, target) in plan.entries.items():
            if len(set(counts.values())) >= 2:
                assert lo - 0.5 <= target <= mx + 0.5
        ordered = sorted(counts.items(), key=lambda kv: kv[1])
        targets = [plan.target(cid) for cid, _ in ordered]
        assert all(a <= b for a, b in zip(targets, targets[1:]))


def _toy_partition():
    """Two windows of 40 and 5 lines: Eq. 1 upsamples the small one to 20."""
    specs = [(float(i), "s0" if i < 60 else "s1", f"m{i}") for i in range(100)]
    corpus = make_corpus(specs)
    windows = [
        extract_windows(corpus, make_failures([40.0]), duration=40.0)[0],
        extract_windows(corpus, make_failures([95.0]), duration=5.0)[0],
    ]
    windows[1].failure_id = 1
    dataset = assign_pu_labels(corpus, windows)
    return corpus, windows, dataset


def test_apply_balance_upsamples_to_target():
    corpus, windows, dataset = _toy_partition()
    pools = {0: windows[0].line_ids, 1: windows[1].line_ids}
    plan = target_sizes({0: len(pools[0]), 1: len(pools[1])})
    balanced = apply_balance(dataset, pools, plan, seed=9)
    assert sorted(balanced.positives) == sorted(dataset.positives)  # P untouched
    from collections import Counter
    multi = Counter(balanced.unknown_multiset)
    assert sum(multi.values()) == sum(plan.target(c) for c in (0, 1))
    # every resample stays inside its own cluster pool
    extras = {i for i, c in multi.items() if c > 1}
    assert extras <= set(pools[0]) | set(pools[1])
    smaller = 0 if len(pools[0]) < len(pools[1]) else 1
    boosted = sum(multi[i] for i in pools[smaller])
    assert boosted == plan.target(smaller)


def test_apply_balance_keeps_max_cluster_unchanged():
    corpus, windows, dataset = _toy_partition()
    pools = {0: windows[0].line_ids, 1: windows[1].line_ids}
    plan = target_sizes({0: len(pools[0]), 1: len(pools[1])})
    balanced = apply_balance(dataset, pools, plan, seed=9)
    larger = 0 if len(pools[0]) >= len(pools[1]) else 1
    from collections import Counter
    multi = Counter(balanced.unknown_multiset)
    assert all(multi[i] == 1 for i in pools[larger])


def test_apply_balance_deterministic_per_seed():
    corpus, windows, dataset = _toy_partition()
    pools = {0: windows[0].line_ids, 1: windows[1].line_ids}
    plan = target_sizes({0: len(pools[0]), 1: len(pools[1])})
    one = apply_balance(dataset, pools, plan, seed=3)
    two = apply_balance(dataset, pools, plan, seed=3)
    other = apply_balance(dataset, pools, plan, seed=4)
    assert one == two
    assert one != other


def test_unbalanced_keeps_every_unknown_once():
    corpus, windows, dataset = _toy_partition()
    flat = unbalanced(dataset)
    assert sorted(flat.unknown_multiset) == sorted(dataset.unknowns)
    assert flat.q == pytest.approx(dataset.q)


def test_cluster_line_pools_union_semantics():
    w0 = _window(0, [1, 2, 3])
    w1 = _window(1, [3, 4])
    assignment = birch_cluster([
        ServiceVector(0, np.array([1.0, 0.0])),
        ServiceVector(1, np.array([1.0, 0.0])),
    ])
    pools = cluster_line_pools(assignment, [w0, w1])
    assert pools[0] == [1, 2, 3, 4]  # shared line counted once
