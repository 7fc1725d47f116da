"""Masked-logit aggregation and argmax prediction."""

import numpy as np
import pytest

import oracles
from npprompt.aggregator import ScoreMode, class_score, keyword_score, predict
from npprompt.errors import CorruptVerbalizerError, DataError
from npprompt.verbalizer import (
    ClassVerbalizer,
    SimilarityMetric,
    Verbalizer,
    VerbalizerEntry,
    WeightScheme,
    build_verbalizer,
)


def _entry(keyword, ids, weights):
    ids = np.asarray(ids, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    return VerbalizerEntry(
        keyword=keyword,
        token_ids=ids,
        tokens=tuple(f"t{t}" for t in ids),
        similarities=np.zeros(ids.size),
        weights=weights,
    )


def test_keyword_score_sum_logit():
    entry = _entry("kw", [2, 0], [0.75, 0.25])
    logits = [4.0, -1.0, 2.0]
    assert keyword_score(logits, entry, ScoreMode.SUM_LOGIT) == pytest.approx(
        0.75 * 2.0 + 0.25 * 4.0
    )


def test_keyword_score_sum_prob_uses_full_vocab_softmax():
    entry = _entry("kw", [0], [1.0])
    logits = [1.0, 1.0, 1.0, 1.0]
    assert keyword_score(logits, entry, ScoreMode.SUM_PROB) == pytest.approx(0.25)


def test_keyword_score_matches_oracle_both_modes():
    rng = np.random.default_rng(17)
    for _ in range(40):
        n = 12
        ids = rng.choice(n, size=4, replace=False)
        w = rng.random(4)
        w = w / w.sum()
        logits = rng.standard_normal(n)
        entry = _entry("kw", ids, w)
        for mode in ScoreMode.ALL:
            want = oracles.keyword_score(logits.tolist(), ids.tolist(), w.tolist(), mode)
            assert keyword_score(logits, entry, mode) == pytest.approx(want, abs=1e-12)


def test_keyword_score_rejects_bad_ids():
    logits = [0.0, 1.0]
    with pytest.raises(CorruptVerbalizerError):
        keyword_score(logits, _entry("kw", [5], [1.0]), ScoreMode.SUM_LOGIT)
    with pytest.raises(CorruptVerbalizerError):
        keyword_score(logits, _entry("kw", [-1], [1.0]), ScoreMode.SUM_LOGIT)


def test_keyword_score_rejects_unknown_mode():
    with pytest.raises(DataError):
        keyword_score([0.0, 1.0], _entry("kw", [0], [1.0]), "mean_logit")


def test_class_score_takes_best_keyword():
    cls = ClassVerbalizer("C", (
        _entry("low", [0], [1.0]),
        _entry("high", [1], [1.0]),
    ))
    score, keyword = class_score([1.0, 3.0], cls, ScoreMode.SUM_LOGIT)
    assert (score, keyword) == (3.0, "high")


def test_class_score_keyword_tie_prefers_declaration_order():
    cls = ClassVerbalizer("C", (
        _entry("first", [0], [1.0]),
        _entry("second", [1], [1.0]),
    ))
    score, keyword = class_score([2.0, 2.0], cls, ScoreMode.SUM_LOGIT)
    assert (score, keyword) == (2.0, "first")


def test_class_score_empty_class_rejected():
    with pytest.raises(CorruptVerbalizerError):
        class_score([1.0], ClassVerbalizer("C", ()), ScoreMode.SUM_LOGIT)


def _tiny_verbalizer():
    return Verbalizer((
        ClassVerbalizer("A", (_entry("a", [0], [1.0]),)),
        ClassVerbalizer("B", (_entry("b", [1], [1.0]),)),
        ClassVerbalizer("C", (_entry("c", [2], [1.0]),)),
    ), vocab_size=3)


def test_predict_argmax_and_winning_keyword():
    result = predict([1.0, 5.0, 2.0], _tiny_verbalizer())
    assert result.predicted_class == 1
    assert result.class_scores == (1.0, 5.0, 2.0)
    assert result.winning_keyword == "b"


def test_predict_class_tie_prefers_smaller_index():
    result = predict([3.0, 3.0, 1.0], _tiny_verbalizer())
    assert result.predicted_class == 0


def test_predict_candidate_subset():
    result = predict([9.0, 1.0, 2.0], _tiny_verbalizer(), candidate_classes=[1, 2])
    assert result.predicted_class == 2
    assert result.class_scores == (9.0, 1.0, 2.0)  # scores still reported for all


def test_predict_candidate_subset_validated():
    with pytest.raises(DataError):
        predict([1.0, 2.0, 3.0], _tiny_verbalizer(), candidate_classes=[])
    with pytest.raises(DataError):
        predict([1.0, 2.0, 3.0], _tiny_verbalizer(), candidate_classes=[3])


def test_predict_validates_logits():
    with pytest.raises(DataError):
        predict([1.0, 2.0], _tiny_verbalizer())  # wrong length
    with pytest.raises(DataError):
        predict([1.0, np.nan, 2.0], _tiny_verbalizer())
    with pytest.raises(DataError):
        predict([1.0, np.inf, 2.0], _tiny_verbalizer())


def test_predict_shift_invariance_sum_logit(micro_vocab, micro_emb, micro_specs, micro_logits):
    # adding a constant to every logit must not change any argmax:
    # weights sum to 1, so every class score shifts by the same constant
    v = build_verbalizer(micro_specs, micro_vocab, micro_emb, k=2)
    for row in micro_logits:
        base = predict(row, v, ScoreMode.SUM_LOGIT).predicted_class
        for c in (-100.0, -1.0, 1.0, 100.0):
            assert predict(row + c, v, ScoreMode.SUM_LOGIT).predicted_class == base


def test_predict_micro_fixture_matches_oracle(micro_vocab, micro_emb, micro_specs, micro_logits):
    v = build_verbalizer(micro_specs, micro_vocab, micro_emb, k=2,
                         metric=SimilarityMetric.COSINE, scheme=WeightScheme.SOFTMAX)
    class_entries = [
        [(e.token_ids.tolist(), e.weights.tolist()) for e in cls.entries]
        for cls in v.classes
    ]
    for mode in ScoreMode.ALL:
        for row in micro_logits:
            want_scores, want_winner = oracles.predict(row.tolist(), class_entries, mode)
            got = predict(row, v, mode)
            assert got.predicted_class == want_winner
            np.testing.assert_allclose(got.class_scores, want_scores, atol=1e-12)
