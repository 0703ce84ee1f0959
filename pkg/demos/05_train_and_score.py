"""Train the attention scorer with the PU objective and score a window.

The loss drives ||z|| toward zero for P lines and q^2/||z|| upward for U
lines, so after training, a line's vector norm reads as its root-cause
relevance. Gradients are hand-derived; `gradient_check` compares them
against central finite differences.

Run 01_synthetic_corpus.py first. Takes ~20 s.
"""

import numpy as np

from logcause import balance as bal
from logcause.corpus import assign_pu_labels, extract_windows, load_corpus, load_failures, load_truth
from logcause.scorer import ModelConfig, ScorerModel, gradient_check, score_window, train
from logcause.tokenizer import TokenizerConfig, build_vocab, tokenize

corpus = load_corpus("demo_output/data/corpus.jsonl")
failures = load_failures("demo_output/data/failures.jsonl")
truth = load_truth("demo_output/data/truth.jsonl")
windows = extract_windows(corpus, failures, duration=3.0)
dataset = assign_pu_labels(corpus, windows)

tok = TokenizerConfig(max_len=16)
vocab = build_vocab((tokenize(l.content, tok) for l in corpus), min_count=1)

index = bal.build_service_index(corpus.services())
vectors = [bal.service_vector(w, corpus, index) for w in windows]
assignment = bal.birch_cluster(vectors)
pools = bal.cluster_line_pools(assignment, windows)
plan = bal.target_sizes({c: len(p) for c, p in pools.items() if c != bal.EMPTY_CLUSTER and p})
balanced = bal.apply_balance(dataset, pools, plan, seed=11)

config = ModelConfig(embed_dim=32, attention_heads=2, hidden_units=64, output_dim=16,
                     max_len=16, epochs=5, batch_size=128, learning_rate=3e-3, seed=11)
model, log = train(balanced, corpus, vocab, tok, config)
for entry in log:
    print(f"epoch {entry['epoch']}: mean loss {entry['mean_loss']:.4f} ({entry['wallclock_ms']} ms)")

# sanity: analytic gradients vs finite differences on a toy sibling model
toy = ScorerModel(ModelConfig(embed_dim=8, attention_heads=2, hidden_units=12,
                              output_dim=5, max_len=6, seed=1), vocab_size=30)
ids = np.random.default_rng(1).integers(2, 30, size=(4, 6))
ids[:, 0] = 1
print("\ngradient check:", gradient_check(toy, ids, np.array([0, 1, 0, 1]), q=0.8))

window = windows[0]
scored = score_window(model, window, corpus, vocab, tok)
planted = truth[window.failure_id]
scored_sorted = sorted(scored, key=lambda s: -s.score)[:8]
print(f"\ntop-scored lines of window {window.failure_id} (* = true root cause):")
for s in scored_sorted:
    marker = "*" if s.line_id in planted else " "
    print(f"  {marker} {s.score:7.3f}  {corpus.get(s.line_id).content}")
