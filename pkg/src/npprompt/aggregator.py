"""Turn a masked-position logit vector into per-class scores and a prediction.

A keyword's score is the weighted sum of the logits at its neighbor token
ids (sum_logit), or of the full-vocabulary softmax probabilities at those
ids (sum_prob). A class with several keywords takes its best keyword's
score; the prediction is the argmax over classes. Scores are deliberately
left unnormalized.

Tie-breaks are fixed: equal keyword scores go to the earlier keyword in
declaration order, equal class scores to the smaller class index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CorruptVerbalizerError, DataError
from .verbalizer import ClassVerbalizer, Verbalizer, VerbalizerEntry


class ScoreMode:
    SUM_LOGIT = "sum_logit"
    SUM_PROB = "sum_prob"
    ALL = (SUM_LOGIT, SUM_PROB)


@dataclass(frozen=True)
class PredictionResult:
    class_scores: tuple[float, ...]
    winning_keywords: tuple[str, ...]  # per class, the keyword attaining its max
    predicted_class: int

    @property
    def winning_keyword(self) -> str:
        """Winning keyword of the predicted class."""
        return self.winning_keywords[self.predicted_class]


def _full_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def keyword_score(logits, entry: VerbalizerEntry, mode: str) -> float:
    """Weighted sum over one keyword's neighbor ids.

    sum_logit reads raw logits; sum_prob reads softmax probabilities taken
    over the whole vocabulary, not just the neighbor subset.
    """
    theta = np.asarray(logits, dtype=np.float64)
    if theta.ndim != 1:
        raise DataError("logit vector must be 1-D")
    ids = entry.token_ids
    if ids.size == 0 or ids.min() < 0 or ids.max() >= theta.shape[0]:
        raise CorruptVerbalizerError(
            f"keyword {entry.keyword!r} has token ids outside the {theta.shape[0]}-token vocabulary"
        )
    if mode == ScoreMode.SUM_LOGIT:
        values = theta[ids]
    elif mode == ScoreMode.SUM_PROB:
        values = _full_softmax(theta)[ids]
    else:
        raise DataError(f"unknown score mode {mode!r}")
    return float(np.dot(entry.weights, values))


def class_score(logits, cls: ClassVerbalizer, mode: str) -> tuple[float, str]:
    """Best keyword score for a class, with the keyword that attained it."""
    if not cls.entries:
        raise CorruptVerbalizerError(f"class {cls.class_name!r} has no keyword entries")
    best_score = None
    best_keyword = None
    for entry in cls.entries:
        score = keyword_score(logits, entry, mode)
        if best_score is None or score > best_score:
            best_score = score
            best_keyword = entry.keyword
    return best_score, best_keyword


def predict(
    logits,
    verbalizer: Verbalizer,
    mode: str = ScoreMode.SUM_LOGIT,
    candidate_classes: Sequence[int] | None = None,
) -> PredictionResult:
    """Argmax prediction over (a subset of) the verbalizer's classes.

    candidate_classes restricts the argmax; scores are still reported for
    every class. Without a subset, predicted_class is the global argmax
    with smallest-index tie-break.
    """
    theta = np.asarray(logits, dtype=np.float64)
    if theta.ndim != 1 or theta.shape[0] != verbalizer.vocab_size:
        raise DataError(
            f"logit vector of length {theta.shape[0] if theta.ndim == 1 else '?'} "
            f"does not match vocabulary size {verbalizer.vocab_size}"
        )
    if not np.all(np.isfinite(theta)):
        raise DataError("logit vector contains NaN or Inf")
    n_classes = len(verbalizer.classes)
    if candidate_classes is None:
        candidates = range(n_classes)
    else:
        candidates = list(candidate_classes)
        if not candidates:
            raise DataError("candidate class subset is empty")
        if any(not 0 <= c < n_classes for c in candidates):
            raise DataError(
                f"candidate classes {candidates} outside 0..{n_classes - 1}"
            )
    scores = []
    winners = []
    for cls in verbalizer.classes:
        score, keyword = class_score(theta, cls, mode)
        scores.append(score)
        winners.append(keyword)
    best = min(candidates, key=lambda c: (-scores[c], c))
    return PredictionResult(tuple(scores), tuple(winners), best)
