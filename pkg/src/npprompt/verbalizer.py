"""Verbalizer construction: each class keyword is mapped to its top-k
nearest vocabulary tokens in the embedding space, and each neighbor gets
an aggregation weight from its similarity to the keyword.

Special tokens are never neighbor candidates. Ties in the top-k ranking
break toward the smaller token id so that results are deterministic and
independent of how the embedding matrix was exported. All similarity and
weight arithmetic runs in float64 regardless of the f32 storage dtype.

Whitening (fit_whitening / whiten) supports the multi-word label path:
contextual token states are decorrelated to zero mean and unit covariance
before the same neighbor search runs on them.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DataError,
    DegenerateVectorError,
    DegenerateWeightsError,
    InvalidKError,
    UnresolvableLabelError,
    WhiteningError,
)
from .tensorio import Vocabulary

logger = logging.getLogger(__name__)


class SimilarityMetric(Enum):
    COSINE = "cosine"
    NEG_EUCLIDEAN = "neg_euclidean"
    DOT = "dot"


class WeightScheme(Enum):
    SOFTMAX = "softmax"
    UNIFORM = "uniform"
    NORMALIZED_SIMILARITY = "normalized_similarity"


@dataclass(frozen=True)
class LabelSpec:
    """A class name plus the keyword set standing in for it.

    Most classes carry a single keyword; semantically weak names take
    several (e.g. river/lake/mountain for a natural-place class).
    """

    class_name: str
    keywords: tuple[str, ...]

    def __post_init__(self):
        if not self.keywords or any(not kw for kw in self.keywords):
            raise ValueError(f"class {self.class_name!r} needs non-empty keywords")


@dataclass(frozen=True, eq=False)
class VerbalizerEntry:
    """One keyword's neighbor list: token ids, display tokens, similarities
    (non-increasing) and weights (nonnegative, summing to 1)."""

    keyword: str
    token_ids: np.ndarray   # int64 [k]
    tokens: tuple[str, ...]
    similarities: np.ndarray  # float64 [k]
    weights: np.ndarray       # float64 [k]


@dataclass(frozen=True, eq=False)
class ClassVerbalizer:
    class_name: str
    entries: tuple[VerbalizerEntry, ...]


@dataclass(frozen=True, eq=False)
class Verbalizer:
    classes: tuple[ClassVerbalizer, ...]
    vocab_size: int

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(c.class_name for c in self.classes)

    def to_json(self) -> str:
        """Inspection dump: classes -> keywords -> (token, id, sim, weight)."""
        out = []
        for cls in self.classes:
            out.append({
                "class": cls.class_name,
                "keywords": [
                    {
                        "keyword": e.keyword,
                        "neighbors": [
                            {
                                "token": tok,
                                "id": int(tid),
                                "similarity": float(sim),
                                "weight": float(w),
                            }
                            for tok, tid, sim, w in zip(
                                e.tokens, e.token_ids, e.similarities, e.weights
                            )
                        ],
                    }
                    for e in cls.entries
                ],
            })
        return json.dumps(out, indent=2, sort_keys=True)


def resolve_keyword(
    keyword: str,
    vocabulary: Vocabulary,
    subwords: Mapping[str, Sequence[int]] | None = None,
) -> list[int]:
    """Resolve a keyword string to one or more token ids.

    The space-prefixed form wins over the bare form when both exist: BPE
    vocabularies store mid-sentence words with a leading space, and that is
    the token the model actually predicts at a mask preceded by a space
    (keyword "sports" must land on " sports", not "sports"). Vocabularies
    without space markers simply fall through to the exact match. As a last
    resort an exporter-provided subword table may split the keyword.
    """
    if not keyword:
        raise UnresolvableLabelError("empty keyword")
    spaced = vocabulary.lookup(" " + keyword)
    if spaced is not None:
        return [spaced]
    exact = vocabulary.lookup(keyword)
    if exact is not None:
        return [exact]
    if subwords and keyword in subwords:
        ids = [int(t) for t in subwords[keyword]]
        if ids and all(0 <= t < len(vocabulary) for t in ids):
            return ids
        raise UnresolvableLabelError(
            f"subword table entry for {keyword!r} is empty or out of range"
        )
    raise UnresolvableLabelError(f"keyword {keyword!r} resolves to no vocabulary token")


def embed_label(
    keyword: str,
    vocabulary: Vocabulary,
    embeddings: np.ndarray,
    subwords: Mapping[str, Sequence[int]] | None = None,
) -> np.ndarray:
    """Embedding for a keyword: the token's own row when it is a single
    vocabulary token, otherwise the mean of its subword rows."""
    ids = resolve_keyword(keyword, vocabulary, subwords)
    rows = np.asarray(embeddings, dtype=np.float64)[ids]
    if len(ids) == 1:
        return rows[0]
    return rows.mean(axis=0)


def similarity(u, v, metric: SimilarityMetric) -> float:
    """Similarity between two vectors under the chosen metric."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if metric is SimilarityMetric.COSINE:
        nu = np.linalg.norm(u)
        nv = np.linalg.norm(v)
        if nu == 0.0 or nv == 0.0:
            raise DegenerateVectorError("cosine similarity of a zero-norm vector")
        return float(np.dot(u, v) / (nu * nv))
    if metric is SimilarityMetric.NEG_EUCLIDEAN:
        return float(-np.linalg.norm(u - v))
    return float(np.dot(u, v))


def _similarities_to_rows(
    label_vec: np.ndarray, rows: np.ndarray, metric: SimilarityMetric
) -> np.ndarray:
    """Vectorized similarity of one label vector against candidate rows."""
    if metric is SimilarityMetric.COSINE:
        label_norm = np.linalg.norm(label_vec)
        if label_norm == 0.0:
            raise DegenerateVectorError("cosine similarity of a zero-norm label vector")
        row_norms = np.linalg.norm(rows, axis=1)
        if np.any(row_norms == 0.0):
            bad = int(np.flatnonzero(row_norms == 0.0)[0])
            raise DegenerateVectorError(
                f"candidate row {bad} has zero norm under cosine similarity"
            )
        return (rows @ label_vec) / (row_norms * label_norm)
    if metric is SimilarityMetric.NEG_EUCLIDEAN:
        return -np.linalg.norm(rows - label_vec, axis=1)
    return rows @ label_vec


def topk_neighbors(
    label_vec,
    embeddings,
    k: int,
    metric: SimilarityMetric,
    vocabulary: Vocabulary | None = None,
) -> list[tuple[int, float]]:
    """Top-k vocabulary neighbors of a label vector by exhaustive scan.

    Returns (token_id, similarity) pairs, similarities non-increasing and
    ties broken toward the smaller id. Special tokens (per the vocabulary's
    flags) are excluded from candidacy; pass vocabulary=None to rank every
    row. Raises InvalidKError unless 1 <= k <= #eligible tokens.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    if vocabulary is not None:
        eligible = vocabulary.eligible_ids()
    else:
        eligible = np.arange(emb.shape[0])
    if not 1 <= k <= eligible.size:
        raise InvalidKError(
            f"k={k} outside 1..{eligible.size} eligible tokens"
        )
    label = np.asarray(label_vec, dtype=np.float64)
    sims = _similarities_to_rows(label, emb[eligible], metric)
    # stable order: similarity descending, then token id ascending
    order = np.lexsort((eligible, -sims))[:k]
    return [(int(eligible[i]), float(sims[i])) for i in order]


def compute_weights(similarities, scheme: WeightScheme) -> np.ndarray:
    """Aggregation weights for a neighbor list's similarity scores.

    softmax (the default): exp(s_i - max s) / sum.
    uniform: 1/k regardless of s.
    normalized_similarity: s_i / sum(s); requires nonnegative scores with a
    positive sum, otherwise the weights could not stay nonnegative.
    """
    s = np.asarray(similarities, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise DegenerateWeightsError("similarity list must be non-empty and 1-D")
    if scheme is WeightScheme.UNIFORM:
        return np.full(s.size, 1.0 / s.size)
    if scheme is WeightScheme.SOFTMAX:
        shifted = np.exp(s - s.max())
        return shifted / shifted.sum()
    total = s.sum()
    if total <= 0.0 or np.any(s < 0.0):
        raise DegenerateWeightsError(
            "normalized_similarity needs nonnegative similarities with a positive sum"
        )
    return s / total


def build_verbalizer(
    label_specs: Sequence[LabelSpec],
    vocabulary: Vocabulary,
    embeddings,
    k: int,
    metric: SimilarityMetric = SimilarityMetric.COSINE,
    scheme: WeightScheme = WeightScheme.SOFTMAX,
    subwords: Mapping[str, Sequence[int]] | None = None,
) -> Verbalizer:
    """Build the full verbalizer: one neighbor list per keyword per class.

    Deterministic given its inputs. Keyword neighborhoods are allowed to
    overlap across classes; overlaps are logged with the shared token ids.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2 or emb.shape[0] != len(vocabulary):
        raise DataError(
            f"embedding matrix of shape {emb.shape} does not cover "
            f"{len(vocabulary)} vocabulary tokens"
        )
    classes = []
    ids_by_class: dict[str, set[int]] = {}
    for spec in label_specs:
        entries = []
        for keyword in spec.keywords:
            label_vec = embed_label(keyword, vocabulary, emb, subwords)
            neighbors = topk_neighbors(label_vec, emb, k, metric, vocabulary)
            ids = np.array([t for t, _ in neighbors], dtype=np.int64)
            sims = np.array([s for _, s in neighbors], dtype=np.float64)
            weights = compute_weights(sims, scheme)
            ids.setflags(write=False)
            sims.setflags(write=False)
            weights.setflags(write=False)
            entries.append(VerbalizerEntry(
                keyword=keyword,
                token_ids=ids,
                tokens=tuple(vocabulary.tokens[t] for t in ids),
                similarities=sims,
                weights=weights,
            ))
        classes.append(ClassVerbalizer(spec.class_name, tuple(entries)))
        ids_by_class[spec.class_name] = {
            int(t) for e in entries for t in e.token_ids
        }
    names = list(ids_by_class)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            shared = sorted(ids_by_class[a] & ids_by_class[b])
            if shared:
                logger.warning(
                    "classes %r and %r share neighbor token ids %s", a, b, shared
                )
    return Verbalizer(tuple(classes), len(vocabulary))


# --- whitening ------------------------------------------------------------------

EIGENVALUE_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class WhiteningTransform:
    """Affine map x -> (x - mean) @ transform giving the fitting sample
    (near-)zero mean and identity covariance."""

    mean: np.ndarray       # [d]
    transform: np.ndarray  # [d, d]


def fit_whitening(contextual_matrix) -> WhiteningTransform:
    """Fit a whitening transform on an n x d sample (n >= 2).

    Uses the eigendecomposition of the population covariance: the transform
    is U diag(lambda)^(-1/2); eigenvalues below 1e-8 are clamped there so a
    rank-deficient sample still yields a finite map.
    """
    sample = np.asarray(contextual_matrix, dtype=np.float64)
    if sample.ndim != 2:
        raise WhiteningError("whitening sample must be a 2-D matrix")
    n = sample.shape[0]
    if n < 2:
        raise WhiteningError(f"whitening needs at least 2 samples, got {n}")
    mean = sample.mean(axis=0)
    centered = sample - mean
    cov = (centered.T @ centered) / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.maximum(eigvals, EIGENVALUE_FLOOR)
    transform = eigvecs * (1.0 / np.sqrt(eigvals))
    mean.setflags(write=False)
    transform.setflags(write=False)
    return WhiteningTransform(mean, transform)


def whiten(vec, transform: WhiteningTransform) -> np.ndarray:
    """Apply a fitted whitening transform to a vector or a matrix of rows."""
    x = np.asarray(vec, dtype=np.float64)
    d = transform.mean.shape[0]
    if x.shape[-1:] != (d,):
        raise WhiteningError(
            f"vector of dimension {x.shape[-1] if x.ndim else 0} does not match "
            f"whitening dimension {d}"
        )
    return (x - transform.mean) @ transform.transform
