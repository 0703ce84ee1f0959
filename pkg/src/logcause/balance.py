"""Root-cause-type estimation and training-data balancing.

Each investigation window is summarized by an L2-normalized vector of
per-service line counts. Windows are grouped with an incremental CF-tree
clusterer (BIRCH); each resulting cluster estimates one root-cause type.
Rare clusters are then upsampled toward a target size in [max/2, max] so the
scorer sees under-represented causes often enough to learn them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import InvestigationWindow, PUDataset
from .errors import DataError

#: Cluster id reserved for empty windows (zero service vector). They carry no
#: lines, so they never participate in target sizing or upsampling.
EMPTY_CLUSTER = -1


@dataclass(frozen=True)
class ServiceVector:
    """Per-window service-occurrence vector, L2-normalized (zero if empty)."""

    window_id: int
    values: np.ndarray


def build_service_index(services: Sequence[str]) -> dict[str, int]:
    """Map each corpus service to a fixed dimension (sorted for determinism)."""
    return {s: i for i, s in enumerate(sorted(set(services)))}


def service_vector(
    window: InvestigationWindow,
    corpus,
    service_index: Mapping[str, int],
) -> ServiceVector:
    """Count window lines per service, then L2-normalize.

    The index must be built corpus-wide first; an unseen service is a hard
    error rather than a silent dimension mismatch.
    """
    values = np.zeros(len(service_index), dtype=np.float64)
    for line_id in window.line_ids:
        service = corpus.get(line_id).service
        if service not in service_index:
            raise DataError(f"service {service!r} missing from service index")
        values[service_index[service]] += 1.0
    norm = float(np.linalg.norm(values))
    if norm > 0:
        values /= norm
    return ServiceVector(window_id=window.failure_id, values=values)


class _Subcluster:
    """Leaf clustering feature: N, LS (vector), SS (scalar), plus members."""

    __slots__ = ("n", "ls", "ss", "members")

    def __init__(self, dim: int):
        self.n = 0
        self.ls = np.zeros(dim, dtype=np.float64)
        self.ss = 0.0
        self.members: list[int] = []

    def centroid(self) -> np.ndarray:
        return self.ls / self.n

    def add(self, x: np.ndarray, member: int) -> None:
        self.n += 1
        self.ls += x
        self.ss += float(x @ x)
        self.members.append(member)

    def radius_if_added(self, x: np.ndarray) -> float:
        """RMS distance of members to centroid after a tentative insertion."""
        n = self.n + 1
        ls = self.ls + x
        ss = self.ss + float(x @ x)
        r2 = ss / n - float(ls @ ls) / (n * n)
        return math.sqrt(max(r2, 0.0))


class _Node:
    __slots__ = ("leaf", "entries", "n", "ls")

    def __init__(self, leaf: bool, dim: int):
        self.leaf = leaf
        self.entries: list = []  # _Subcluster if leaf, _Node otherwise
        self.n = 0
        self.ls = np.zeros(dim, dtype=np.float64)

    def centroid(self) -> np.ndarray:
        return self.ls / self.n

    def recompute_aggregate(self) -> None:
        self.n = sum(e.n for e in self.entries)
        self.ls = sum((e.ls for e in self.entries), start=np.zeros_like(self.ls))


class BirchTree:
    """CF-tree with Euclidean centroid routing and an RMS-radius merge test.

    Leaf subclusters are final: there is no global refinement phase, so the
    number of clusters is determined by the data and the threshold alone.
    Insertion order matters; callers feed vectors in ascending window id.
    """

    def __init__(self, branching: int = 50, threshold: float = 0.5):
        if branching < 2:
            raise DataError(f"branching factor must be >= 2, got {branching}")
        if threshold <= 0:
            raise DataError(f"threshold must be positive, got {threshold}")
        self.branching = branching
        self.threshold = threshold
        self._root: _Node | None = None
        self._dim: int | None = None

    def insert(self, x: np.ndarray, member: int) -> None:
        if self._root is None:
            self._dim = x.shape[0]
            self._root = _Node(leaf=True, dim=self._dim)
        split = self._insert(self._root, x, member)
        if split is not None:
            left, right = split
            new_root = _Node(leaf=False, dim=self._dim)
            new_root.entries = [left, right]
            new_root.recompute_aggregate()
            self._root = new_root

    def _insert(self, node: _Node, x: np.ndarray, member: int):
        node.n += 1
        node.ls += x
        if node.leaf:
            if node.entries:
                dists = [float(np.linalg.norm(sub.centroid() - x)) for sub in node.entries]
                best = node.entries[int(np.argmin(dists))]
                if best.radius_if_added(x) <= self.threshold:
                    best.add(x, member)
                    return None
            sub = _Subcluster(x.shape[0])
            sub.add(x, member)
            node.entries.append(sub)
        else:
            dists = [float(np.linalg.norm(child.centroid() - x)) for child in node.entries]
            child = node.entries[int(np.argmin(dists))]
            child_split = self._insert(child, x, member)
            if child_split is not None:
                idx = node.entries.index(child)
                node.entries[idx : idx + 1] = list(child_split)
        if len(node.entries) > self.branching:
            return self._split(node)
        return None

    def _split(self, node: _Node) -> tuple[_Node, _Node]:
        """Farthest-pair seeding, then redistribute entries by nearest seed."""
        cents = [e.centroid() for e in node.entries]
        k = len(cents)
        seed_a, seed_b, best = 0, 1, -1.0
        for i in range(k):
            for j in range(i + 1, k):
                d = float(np.linalg.norm(cents[i] - cents[j]))
                if d > best:
                    seed_a, seed_b, best = i, j, d
        left = _Node(leaf=node.leaf, dim=self._dim)
        right = _Node(leaf=node.leaf, dim=self._dim)
        for i, entry in enumerate(node.entries):
            da = float(np.linalg.norm(cents[i] - cents[seed_a]))
            db = float(np.linalg.norm(cents[i] - cents[seed_b]))
            (left if da <= db else right).entries.append(entry)
        left.recompute_aggregate()
        right.recompute_aggregate()
        return left, right

    def leaf_subclusters(self) -> list[_Subcluster]:
        """All leaf subclusters, ordered by their earliest member."""
        found: list[_Subcluster] = []

        def walk(node: _Node) -> None:
            if node.leaf:
                found.extend(node.entries)
            else:
                for child in node.entries:
                    walk(child)

        if self._root is not None:
            walk(self._root)
        return sorted(found, key=lambda s: min(s.members))


@dataclass(frozen=True)
class ClusterAssignment:
    """Window -> cluster map plus the per-cluster window groups."""

    window_to_cluster: dict[int, int]
    cluster_windows: dict[int, list[int]]

    @property
    def clusters(self) -> list[int]:
        return sorted(self.cluster_windows)


def birch_cluster(
    vectors: Sequence[ServiceVector],
    branching: int = 50,
    threshold: float = 0.5,
) -> ClusterAssignment:
    """Cluster service vectors; each cluster estimates one root-cause type.

    Zero vectors (empty windows) bypass the tree and share the reserved
    :data:`EMPTY_CLUSTER` id; at the T=0.5 default they would otherwise merge
    into unit-vector subclusters sitting exactly on the radius boundary.
    """
    tree = BirchTree(branching=branching, threshold=threshold)
    assignment: dict[int, int] = {}
    empties: list[int] = []
    for vec in sorted(vectors, key=lambda v: v.window_id):
        if not np.any(vec.values):
            empties.append(vec.window_id)
        else:
            tree.insert(vec.values, vec.window_id)
    groups: dict[int, list[int]] = {}
    for cid, sub in enumerate(tree.leaf_subclusters()):
        groups[cid] = sorted(sub.members)
        for wid in sub.members:
            assignment[wid] = cid
    if empties:
        groups[EMPTY_CLUSTER] = sorted(empties)
        for wid in empties:
            assignment[wid] = EMPTY_CLUSTER
    return ClusterAssignment(window_to_cluster=assignment, cluster_windows=groups)


def cluster_line_pools(
    assignment: ClusterAssignment,
    windows: Sequence[InvestigationWindow],
) -> dict[int, list[int]]:
    """Union of line ids per cluster (a line shared by two windows of the same
    cluster counts once, matching the single-global-U-label rule)."""
    by_id = {w.failure_id: w for w in windows}
    pools: dict[int, list[int]] = {}
    for cid, wids in assignment.cluster_windows.items():
        merged: set[int] = set()
        for wid in wids:
            merged.update(by_id[wid].line_ids)
        pools[cid] = sorted(merged)
    return pools


@dataclass(frozen=True)
class BalancePlan:
    """Per-cluster current size and target size from min-max normalization
    into [max/2, max]."""

    entries: dict[int, tuple[int, int]]  # cluster id -> (count, target)
    min_count: int
    max_count: int

    def target(self, cluster_id: int) -> int:
        return self.entries[cluster_id][1]


def target_sizes(counts: Mapping[int, int]) -> BalancePlan:
    """Normalize cluster line counts into [max/2, max], rounded to nearest.

    The smallest cluster maps to half the largest; the largest maps to itself.
    A single cluster, or all-equal counts, is left unchanged (the formula
    degenerates to 0/0 there).
    """
    if not counts:
        raise DataError("target_sizes needs at least one cluster")
    if any(c <= 0 for c in counts.values()):
        raise DataError("cluster line counts must be positive")
    mn, mx = min(counts.values()), max(counts.values())
    entries: dict[int, tuple[int, int]] = {}
    for cid, c in counts.items():
        if mx == mn:
            t = c
        else:
            raw = (c - mn) / (mx - mn) * (mx - mx / 2) + mx / 2
            t = int(math.floor(raw + 0.5))
        entries[cid] = (c, t)
    return BalancePlan(entries=entries, min_count=mn, max_count=mx)


@dataclass(frozen=True)
class BalancedDataset:
    """Training view of a PUDataset: P once each, U as a multiset.

    After balancing, rare-cluster lines appear multiple times in
    ``unknown_multiset``; q is recomputed over the multiset size.
    """

    positives: tuple[int, ...]
    unknown_multiset: tuple[int, ...]
    q: float

    @classmethod
    def from_parts(cls, positives: Sequence[int], unknowns: Sequence[int]) -> "BalancedDataset":
        p, u = len(positives), len(unknowns)
        if p == 0 or u == 0:
            raise DataError("both classes must be non-empty")
        return cls(tuple(positives), tuple(unknowns), q=p / (p + u))


def unbalanced(dataset: PUDataset) -> BalancedDataset:
    """The identity plan: every U line exactly once (ablation path)."""
    return BalancedDataset.from_parts(sorted(dataset.positives), sorted(dataset.unknowns))


def apply_balance(
    dataset: PUDataset,
    pools: Mapping[int, Sequence[int]],
    plan: BalancePlan,
    seed: int,
) -> BalancedDataset:
    """Upsample each cluster's U lines to its target size.

    Clusters at or above target keep every line once; no observed line is ever
    dropped. Extra draws are uniform with replacement from the cluster's own
    pool, seeded, in ascending cluster id order for reproducibility. P is not
    touched.
    """
    for cid, pool in pools.items():
        if cid != EMPTY_CLUSTER and pool and cid not in plan.entries:
            raise DataError(f"balance plan does not cover cluster {cid}")
    rng = np.random.default_rng(seed)
    extras: list[int] = []
    for cid in sorted(plan.entries):
        pool = list(pools.get(cid, ()))
        if not pool:
            continue
        target = plan.target(cid)
        deficit = target - len(pool)
        if deficit > 0:
            picks = rng.integers(0, len(pool), size=deficit)
            extras.extend(pool[int(i)] for i in picks)
    base = sorted(dataset.unknowns)
    return BalancedDataset.from_parts(sorted(dataset.positives), base + extras)


def balance_report(
    assignment: ClusterAssignment,
    pools: Mapping[int, Sequence[int]],
    plan: BalancePlan | None,
) -> dict:
    """JSON-ready summary consumed by the CLI ``inspect`` command and the UI."""
    clusters = []
    for cid in assignment.clusters:
        count = len(pools.get(cid, ()))
        entry = {
            "cluster_id": cid,
            "windows": assignment.cluster_windows[cid],
            "line_count": count,
        }
        if plan is not None and cid in plan.entries:
            target = plan.target(cid)
            entry["target_size"] = target
            entry["upsampled_lines"] = max(0, target - count)
        clusters.append(entry)
    report = {"clusters": clusters, "num_clusters": len(clusters)}
    if plan is not None:
        report["min_count"] = plan.min_count
        report["max_count"] = plan.max_count
    return report
