"""Fully zero-shot text classification with nonparametric k-NN verbalizers.

A class is described by a handful of keywords. Each keyword is embedded with
the model's own input embedding table, its top-k nearest vocabulary tokens
become the verbalizer, and masked-position logits for those tokens are
aggregated under similarity-derived weights. No labeled data, no manually
curated label words.
"""

from .aggregator import PredictionResult, ScoreMode, class_score, keyword_score, predict
from .backend import FileBackend, HTTPBackend, ScoreRequest
from .errors import (
    BackendError,
    ConfigError,
    DataError,
    NPPromptError,
)
from .evaluation import (
    EvalReport,
    Pipeline,
    accuracy,
    confusion_matrix,
    evaluate,
    f1_binary,
    matthews,
    run_predictions,
    summarize_template_runs,
    sweep_k,
)
from .prompting import MASK_MARKER, Template, parse_template, render
from .tensorio import (
    DatasetRecord,
    LogitsBatch,
    VocabEntry,
    Vocabulary,
    read_dataset,
    read_logits_batch,
    read_tensor,
    read_vocab,
    write_manifest,
    write_tensor,
    write_vocab,
)
from .verbalizer import (
    ClassVerbalizer,
    LabelSpec,
    SimilarityMetric,
    Verbalizer,
    VerbalizerEntry,
    WeightScheme,
    WhiteningTransform,
    build_verbalizer,
    compute_weights,
    embed_label,
    fit_whitening,
    similarity,
    topk_neighbors,
    whiten,
)

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "ClassVerbalizer",
    "ConfigError",
    "DataError",
    "DatasetRecord",
    "EvalReport",
    "FileBackend",
    "HTTPBackend",
    "LabelSpec",
    "LogitsBatch",
    "MASK_MARKER",
    "NPPromptError",
    "Pipeline",
    "PredictionResult",
    "ScoreMode",
    "ScoreRequest",
    "SimilarityMetric",
    "Template",
    "Verbalizer",
    "VerbalizerEntry",
    "VocabEntry",
    "Vocabulary",
    "WeightScheme",
    "WhiteningTransform",
    "accuracy",
    "build_verbalizer",
    "class_score",
    "compute_weights",
    "confusion_matrix",
    "embed_label",
    "evaluate",
    "f1_binary",
    "fit_whitening",
    "keyword_score",
    "matthews",
    "parse_template",
    "predict",
    "read_dataset",
    "read_logits_batch",
    "read_tensor",
    "read_vocab",
    "render",
    "run_predictions",
    "similarity",
    "summarize_template_runs",
    "sweep_k",
    "topk_neighbors",
    "whiten",
    "write_manifest",
    "write_tensor",
    "write_vocab",
]
