"""Run the full pipeline through the stage functions and compare scorers.

This is exactly what `logcause train`, `logcause score` and `logcause eval`
do, minus the CLI parsing. The report averages precision@n and recall@n per
scorer and counts full-coverage windows (every true root-cause line inside
the top-n).

Run 01_synthetic_corpus.py first. Takes ~30 s.
"""

from logcause import pipeline
from logcause.artifacts import RunConfig
from logcause.ranking import format_report_table
from logcause.scorer import ModelConfig
from logcause.tokenizer import TokenizerConfig

config = RunConfig(
    corpus="demo_output/data/corpus.jsonl",
    failures="demo_output/data/failures.jsonl",
    truth="demo_output/data/truth.jsonl",
    out_dir="demo_output/run",
    tokenizer=TokenizerConfig(max_len=16),
    model=ModelConfig(embed_dim=32, attention_heads=2, hidden_units=64, output_dim=16,
                      max_len=16, epochs=5, batch_size=128, learning_rate=3e-3, seed=11),
    scorers=("logrca", "tree"),
    eval_n=(5, 10, 20),
    seed=11,
)

print("training:", pipeline.run_train(config))
print("scoring:", pipeline.run_score(config))
report = pipeline.run_eval(config)
print()
print(format_report_table(report))
print("\nartifacts live in demo_output/run; inspect them with:")
print("  logcause inspect --out-dir demo_output/run")
