"""homdis: embedding-agnostic benchmark toolkit for homograph disambiguation.

Trains per-homograph word-expert classifiers over externally supplied
embeddings, runs cross-validation / few-shot / masked / word-piece /
centroid-probing experiments, and mines candidate sentences for rare
analyses of skewed homographs.
"""

from .dataset import (
    AmbiguityCategory,
    Analysis,
    ChallengeSet,
    FoldPlan,
    LabeledSentence,
    classify_ambiguity,
    load_challenge_set,
    plan_folds,
    sample_fewshot,
    save_challenge_set,
)
from .embedio import (
    AggregationStrategy,
    EmbeddingRecord,
    EmbeddingSet,
    aggregate_pieces,
    read_embedding_set,
    write_embedding_set,
)
from .evalharness import (
    CentroidScenario,
    ConfusionAccumulator,
    ContextualMlpScenario,
    EvalReport,
    W2vBaselineScenario,
    bucket_report,
    macro_f1,
    micro_f1_per_analysis,
    run_cv,
    run_fewshot,
)
from .expert import (
    ContextualExpert,
    W2vBaselineExpert,
    WordVectorTable,
    load_word_vectors,
    predict,
    predict_baseline,
    save_word_vectors,
    train_contextual_expert,
    train_w2v_baseline,
)
from .probe import CentroidModel, classify_centroid, fit_centroids

__version__ = "0.1.0"

__all__ = [
    "AggregationStrategy",
    "AmbiguityCategory",
    "Analysis",
    "CentroidModel",
    "CentroidScenario",
    "ChallengeSet",
    "ConfusionAccumulator",
    "ContextualExpert",
    "ContextualMlpScenario",
    "EmbeddingRecord",
    "EmbeddingSet",
    "EvalReport",
    "FoldPlan",
    "LabeledSentence",
    "W2vBaselineExpert",
    "W2vBaselineScenario",
    "WordVectorTable",
    "aggregate_pieces",
    "bucket_report",
    "classify_ambiguity",
    "classify_centroid",
    "fit_centroids",
    "load_challenge_set",
    "load_word_vectors",
    "macro_f1",
    "micro_f1_per_analysis",
    "plan_folds",
    "predict",
    "predict_baseline",
    "read_embedding_set",
    "run_cv",
    "run_fewshot",
    "sample_fewshot",
    "save_challenge_set",
    "save_word_vectors",
    "train_contextual_expert",
    "train_w2v_baseline",
    "write_embedding_set",
]
