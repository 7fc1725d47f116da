"""Dataset-level evaluation: run the classify pipeline over a labeled
dataset, compute the configured metric (accuracy, binary F1 or Matthews
correlation), and emit deterministic reports.

There is no randomness anywhere in the pipeline: two runs over identical
inputs must produce byte-identical report files, which is what makes the
report diffable and the method auditable.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .aggregator import PredictionResult, ScoreMode, predict
from .backend import ScoreRequest
from .errors import BackendError, ConfigError, DataError, MetricError
from .prompting import Template, render
from .tensorio import DatasetRecord, Vocabulary
from .verbalizer import (
    LabelSpec,
    SimilarityMetric,
    Verbalizer,
    WeightScheme,
    build_verbalizer,
)


# --- metrics ---------------------------------------------------------------------

def accuracy(preds: Sequence[int], golds: Sequence[int]) -> float:
    """Fraction of exact matches."""
    if len(preds) != len(golds):
        raise MetricError(f"length mismatch: {len(preds)} preds vs {len(golds)} golds")
    if not preds:
        raise MetricError("cannot compute accuracy of zero examples")
    return sum(p == g for p, g in zip(preds, golds)) / len(preds)


def _require_binary(preds, golds):
    if len(preds) != len(golds):
        raise MetricError(f"length mismatch: {len(preds)} preds vs {len(golds)} golds")
    if not preds:
        raise MetricError("empty input")
    values = set(preds) | set(golds)
    if not values <= {0, 1}:
        raise MetricError(f"labels must be binary 0/1, found {sorted(values)}")


def f1_binary(preds: Sequence[int], golds: Sequence[int], positive_class: int = 1) -> float:
    """2PR/(P+R) against the positive class; 0 when P+R is 0."""
    _require_binary(preds, golds)
    if positive_class not in (0, 1):
        raise MetricError(f"positive_class must be 0 or 1, got {positive_class}")
    tp = sum(1 for p, g in zip(preds, golds) if p == positive_class and g == positive_class)
    fp = sum(1 for p, g in zip(preds, golds) if p == positive_class and g != positive_class)
    fn = sum(1 for p, g in zip(preds, golds) if p != positive_class and g == positive_class)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def matthews(preds: Sequence[int], golds: Sequence[int]) -> float:
    """Matthews correlation coefficient; 0 when any marginal factor is 0."""
    _require_binary(preds, golds)
    tp = sum(1 for p, g in zip(preds, golds) if p == 1 and g == 1)
    tn = sum(1 for p, g in zip(preds, golds) if p == 0 and g == 0)
    fp = sum(1 for p, g in zip(preds, golds) if p == 1 and g == 0)
    fn = sum(1 for p, g in zip(preds, golds) if p == 0 and g == 1)
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


METRICS = {
    "accuracy": accuracy,
    "f1_binary": f1_binary,
    "matthews": matthews,
}


def confusion_matrix(preds: Sequence[int], golds: Sequence[int], n_classes: int) -> list[list[int]]:
    """Rows are gold classes, columns predictions; entries sum to len(preds)."""
    matrix = [[0] * n_classes for _ in range(n_classes)]
    for p, g in zip(preds, golds):
        matrix[g][p] += 1
    return matrix


# --- pipeline --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Pipeline:
    """Everything needed to score and classify one example.

    `embeddings` is the matrix the verbalizer searches (already whitened
    when the whitened-contextual path is configured).
    """

    vocabulary: Vocabulary
    embeddings: np.ndarray
    label_specs: tuple[LabelSpec, ...]
    template: Template
    backend: object  # FileBackend or HTTPBackend
    k: int
    metric: SimilarityMetric = SimilarityMetric.COSINE
    scheme: WeightScheme = WeightScheme.SOFTMAX
    mode: str = ScoreMode.SUM_LOGIT
    subwords: Mapping[str, Sequence[int]] | None = None
    parallel: int = 1
    _cache: dict = field(default_factory=dict, repr=False)

    def verbalizer(self, k: int | None = None) -> Verbalizer:
        if not self.label_specs:
            raise ConfigError(
                "no classes configured; fixed-class records need label specs"
            )
        k = self.k if k is None else k
        if k not in self._cache:
            self._cache[k] = build_verbalizer(
                self.label_specs, self.vocabulary, self.embeddings,
                k, self.metric, self.scheme, self.subwords,
            )
        return self._cache[k]

    def choice_verbalizer(self, choices: Sequence[str], k: int | None = None) -> Verbalizer:
        """Transient per-example verbalizer over multiple-choice strings."""
        specs = tuple(LabelSpec(choice, (choice,)) for choice in choices)
        return build_verbalizer(
            specs, self.vocabulary, self.embeddings,
            self.k if k is None else k, self.metric, self.scheme, self.subwords,
        )

    def score_logits(self, records: Sequence[DatasetRecord]) -> list[np.ndarray]:
        """Fetch the masked-position logits for every record, in order."""
        requests = []
        for record in records:
            prompted, offset = render(self.template, record)
            requests.append(ScoreRequest(record.id, prompted, offset))
        if self.parallel > 1 and len(requests) > 1:
            with ThreadPoolExecutor(max_workers=self.parallel) as pool:
                return list(pool.map(self.backend.score, requests))
        return [self.backend.score(r) for r in requests]

    def predict_scored(
        self, record: DatasetRecord, logits: np.ndarray, k: int | None = None
    ) -> PredictionResult:
        if record.choices is not None:
            return predict(logits, self.choice_verbalizer(record.choices, k), self.mode)
        return predict(logits, self.verbalizer(k), self.mode)


@dataclass(frozen=True)
class EvalReport:
    n_examples: int
    metric_name: str
    metric_value: float
    per_class_confusion: tuple[tuple[int, ...], ...]
    config_echo: dict

    def to_dict(self) -> dict:
        return {
            "n_examples": self.n_examples,
            "metric_name": self.metric_name,
            "metric_value": self.metric_value,
            "per_class_confusion": [list(row) for row in self.per_class_confusion],
            "config_echo": self.config_echo,
        }


def _n_classes(records: Sequence[DatasetRecord], pipeline: Pipeline) -> int:
    if records and records[0].choices is not None:
        return max(len(r.choices) for r in records)
    if not pipeline.label_specs:
        raise ConfigError("no classes configured; fixed-class records need label specs")
    return len(pipeline.label_specs)


def run_predictions(
    records: Sequence[DatasetRecord],
    pipeline: Pipeline,
    k: int | None = None,
    logits: Sequence[np.ndarray] | None = None,
) -> list[PredictionResult]:
    """Score (unless pre-scored logits are passed) and classify every record."""
    if logits is None:
        logits = pipeline.score_logits(records)
    results = []
    for record, theta in zip(records, logits):
        try:
            results.append(pipeline.predict_scored(record, theta, k))
        except (DataError, BackendError) as exc:
            raise type(exc)(f"example {record.id!r}: {exc}") from exc
    return results


def evaluate(
    records: Sequence[DatasetRecord],
    pipeline: Pipeline,
    metric_name: str = "accuracy",
    positive_class: int = 1,
    config_echo: dict | None = None,
    logits: Sequence[np.ndarray] | None = None,
    k: int | None = None,
) -> tuple[EvalReport, list[PredictionResult]]:
    """Evaluate the pipeline on a fully labeled dataset.

    Every record must carry a gold label; any backend failure aborts with
    the failing example id attached. Returns the report plus per-example
    predictions for the audit dump. `k` overrides the pipeline's
    neighborhood size (used by sweeps); `logits` skips re-scoring.
    """
    if not records:
        raise MetricError("cannot evaluate an empty dataset")
    missing = [r.id for r in records if r.label is None]
    if missing:
        raise MetricError(f"examples without gold labels: {missing[:5]}")
    has_choices = [r.id for r in records if r.choices is not None]
    if has_choices and len(has_choices) != len(records):
        raise DataError("datasets mixing multiple-choice and fixed-class records are not supported")
    n_classes = _n_classes(records, pipeline)
    bad = [
        r.id for r in records
        if r.label >= (len(r.choices) if r.choices is not None else n_classes)
    ]
    if bad:
        raise MetricError(f"gold labels outside the class set: {bad[:5]}")
    if metric_name not in METRICS:
        raise MetricError(f"unknown metric {metric_name!r}")

    results = run_predictions(records, pipeline, k=k, logits=logits)
    preds = [r.predicted_class for r in results]
    golds = [r.label for r in records]
    if metric_name == "f1_binary":
        value = f1_binary(preds, golds, positive_class)
    else:
        value = METRICS[metric_name](preds, golds)
    report = EvalReport(
        n_examples=len(records),
        metric_name=metric_name,
        metric_value=value,
        per_class_confusion=tuple(
            tuple(row) for row in confusion_matrix(preds, golds, n_classes)
        ),
        config_echo=config_echo or {},
    )
    return report, results


def sweep_k(
    records: Sequence[DatasetRecord],
    pipeline: Pipeline,
    k_values: Sequence[int],
    metric_name: str = "accuracy",
    positive_class: int = 1,
) -> list[tuple[int, float]]:
    """Evaluate across neighborhood sizes: logits are scored once and
    reused, the verbalizer is rebuilt per k."""
    logits = pipeline.score_logits(records)
    rows = []
    for k in k_values:
        report, _ = evaluate(
            records, pipeline, metric_name, positive_class, logits=logits, k=k,
        )
        rows.append((k, report.metric_value))
    return rows


def summarize_template_runs(values: Sequence[float]) -> dict:
    """Mean and standard error across per-template metric values."""
    n = len(values)
    if n == 0:
        raise MetricError("no template runs to summarize")
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return {"n_templates": n, "mean": mean, "stderr": stderr, "values": list(values)}


# --- report emission --------------------------------------------------------------

def report_json_bytes(report: EvalReport) -> bytes:
    return (json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")


def report_text(report: EvalReport, class_names: Sequence[str]) -> str:
    """Plain-text rendering: metric line plus the confusion matrix."""
    lines = [
        f"examples : {report.n_examples}",
        f"metric   : {report.metric_name} = {report.metric_value:.6f}",
        "confusion (rows gold, cols predicted):",
    ]
    width = max([len(name) for name in class_names] + [6])
    header = " " * (width + 2) + " ".join(f"{name:>{width}}" for name in class_names)
    lines.append(header)
    for name, row in zip(class_names, report.per_class_confusion):
        lines.append(f"  {name:>{width}} " + " ".join(f"{v:>{width}}" for v in row))
    return "\n".join(lines) + "\n"


def predictions_jsonl(records: Sequence[DatasetRecord], results: Sequence[PredictionResult]) -> bytes:
    """Per-example audit dump, one JSON object per line."""
    lines = []
    for record, result in zip(records, results):
        lines.append(json.dumps({
            "id": record.id,
            "predicted_class": result.predicted_class,
            "class_scores": [float(s) for s in result.class_scores],
            "winning_keyword": result.winning_keyword,
        }, sort_keys=True))
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def sweep_csv(rows: Sequence[tuple[int, float]]) -> str:
    out = ["k,metric"]
    for k, value in rows:
        out.append(f"{k},{value!r}")
    return "\n".join(out) + "\n"
