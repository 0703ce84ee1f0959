"""Cut investigation windows out of the corpus and assign PU labels.

Every line inside the 3 seconds before a failure becomes class U (unknown);
everything else is class P (positive, i.e. presumed normal). q is the share
of P in the corpus and later weights the training objective.

Run 01_synthetic_corpus.py first.
"""

from logcause.corpus import assign_pu_labels, extract_windows, load_corpus, load_failures

corpus = load_corpus("demo_output/data/corpus.jsonl")
failures = load_failures("demo_output/data/failures.jsonl")
print(f"corpus: {len(corpus)} lines across {len(corpus.services())} services")

windows = extract_windows(corpus, failures, duration=3.0)
for window in windows:
    first = corpus.get(window.line_ids[0]).timestamp if window.line_ids else None
    print(f"window {window.failure_id}: {len(window)} lines, first ts {first}")

dataset = assign_pu_labels(corpus, windows)
print(f"\n|P| = {len(dataset.positives)}, |U| = {len(dataset.unknowns)}, q = {dataset.q:.4f}")

# a line inside two overlapping windows would still carry ONE global U label
sample = windows[0].line_ids[0]
print(f"label of line {sample} (inside window 0): {dataset.label(sample)}")
print(f"label of line 0 (normal traffic): {dataset.label(0)}")
