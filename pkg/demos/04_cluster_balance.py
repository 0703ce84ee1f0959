"""Estimate root-cause types by clustering windows, then rebalance class U.

Each window is summarized by an L2-normalized vector of per-service line
counts; a CF-tree (BIRCH) groups the windows; each cluster approximates one
root-cause type. Rare clusters are upsampled toward a target in
[max/2, max] so the scorer sees them often enough to learn them.

Run 01_synthetic_corpus.py first.
"""

import json

from logcause import balance as bal
from logcause.corpus import assign_pu_labels, extract_windows, load_corpus, load_failures

corpus = load_corpus("demo_output/data/corpus.jsonl")
failures = load_failures("demo_output/data/failures.jsonl")
windows = extract_windows(corpus, failures, duration=3.0)
dataset = assign_pu_labels(corpus, windows)

index = bal.build_service_index(corpus.services())
vectors = [bal.service_vector(w, corpus, index) for w in windows]
print("service-vector dimension:", len(index))

assignment = bal.birch_cluster(vectors, branching=50, threshold=0.5)
pools = bal.cluster_line_pools(assignment, windows)
counts = {c: len(p) for c, p in pools.items() if c != bal.EMPTY_CLUSTER and p}
print("clusters (windows -> line pool):")
for cid in assignment.clusters:
    print(f"  cluster {cid}: windows {assignment.cluster_windows[cid]}, {len(pools[cid])} lines")

plan = bal.target_sizes(counts)
print("\ntargets from the [max/2, max] normalization:")
for cid, (count, target) in sorted(plan.entries.items()):
    print(f"  cluster {cid}: {count} -> {target} ({'+' + str(target - count) if target > count else 'kept'})")

balanced = bal.apply_balance(dataset, pools, plan, seed=11)
print(f"\n|U| before {len(dataset.unknowns)}, after {len(balanced.unknown_multiset)}; "
      f"q {dataset.q:.4f} -> {balanced.q:.4f}")

report = bal.balance_report(assignment, pools, plan)
print("\nbalance report (as persisted for `logcause inspect`):")
print(json.dumps(report, indent=2)[:400], "...")
