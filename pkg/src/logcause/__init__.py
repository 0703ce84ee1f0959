"""logcause: rank the log lines that explain a failure.

Given raw service logs and failure timestamps, the pipeline labels every
line positive (outside all investigation windows) or unknown (inside one),
balances the unknown class across estimated root-cause types, trains an
attention scorer with a positive-unlabeled objective, and retrieves the
top-n candidate lines per failure in chronological order.
"""

from .balance import (
    BalancedDataset,
    BalancePlan,
    ClusterAssignment,
    ServiceVector,
    apply_balance,
    birch_cluster,
    build_service_index,
    cluster_line_pools,
    service_vector,
    target_sizes,
    unbalanced,
)
from .baseline import DecisionTree, TfIdfModel, TreeScorerModel, tfidf_fit_transform, train_tree_scorer
from .corpus import (
    FailureEvent,
    InvestigationWindow,
    LogCorpus,
    LogLine,
    PUDataset,
    assign_pu_labels,
    extract_windows,
    load_corpus,
    load_failures,
    load_truth,
)
from .errors import ConfigError, DataError, TrainingDiverged
from .ranking import (
    Candidate,
    CandidateSet,
    eval_report,
    format_report_table,
    full_coverage,
    precision_at,
    recall_at,
    select_top_n,
)
from .scorer import (
    GradientCheckResult,
    ModelConfig,
    ScoredLine,
    ScorerModel,
    gradient_check,
    pu_loss,
    score_contents,
    score_window,
    train,
)
from .tokenizer import TokenizerConfig, TokenSequence, Vocabulary, build_vocab, decode, encode, tokenize

__version__ = "0.1.0"
