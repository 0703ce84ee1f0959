"""Generate a miniature log corpus with injected failures and peek inside.

The generator emits three JSONL files in the exact formats the pipeline
ingests: the corpus itself, the failure events, and the ground-truth line
ids planted for each failure.
"""

import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from logcause.synthgen import GenConfig, build_cause_types, generate, service_names

OUT = Path("demo_output/data")

services = service_names(6)
causes = build_cause_types(
    3, services, np.random.default_rng(0),
    chain_lengths=[6, 5, 4], weights=[10.0, 4.0, 1.0],
)
# give each cause its own pair of services so the windows cluster apart
causes = tuple(
    replace(cause, steps=tuple(
        replace(step, service=services[2 * ci + si % 2])
        for si, step in enumerate(cause.steps)
    ))
    for ci, cause in enumerate(causes)
)
config = GenConfig(
    services=6, normal_templates_per_service=8, duration=300.0,
    base_rate=1.5, failures=8, cause_types=causes, seed=11,
)
result = generate(config, OUT)

print("generated:", json.dumps(result.stats, indent=2))
print("\nfirst five corpus lines:")
with open(result.corpus_path) as fh:
    for _, raw in zip(range(5), fh):
        row = json.loads(raw)
        print(f"  {row['ts']}  {row['service']:<12} {row['msg']}")

print("\nfailures:")
with open(result.failures_path) as fh:
    for raw in fh:
        print("  " + raw.strip())

print("\nfirst ground-truth record:")
with open(result.truth_path) as fh:
    print("  " + fh.readline().strip())
