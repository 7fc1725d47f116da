"""Keyword resolution, neighbor search, weighting and whitening."""

import numpy as np
import pytest

import oracles
from npprompt.errors import (
    DataError,
    DegenerateVectorError,
    DegenerateWeightsError,
    InvalidKError,
    UnresolvableLabelError,
    WhiteningError,
)
from npprompt.tensorio import VocabEntry, Vocabulary
from npprompt.verbalizer import (
    LabelSpec,
    SimilarityMetric,
    WeightScheme,
    build_verbalizer,
    compute_weights,
    embed_label,
    fit_whitening,
    resolve_keyword,
    similarity,
    topk_neighbors,
    whiten,
)


def _vocab(*tokens, special=()):
    return Vocabulary.from_entries(
        VocabEntry(i, t, t in special) for i, t in enumerate(tokens)
    )


# --- keyword resolution -------------------------------------------------------

def test_space_prefixed_form_wins():
    # "sports" must land on the token the model predicts mid-sentence
    vocab = _vocab("sports", " sports")
    assert resolve_keyword("sports", vocab) == [1]


def test_exact_match_fallback():
    vocab = _vocab("sports", " game")
    assert resolve_keyword("sports", vocab) == [0]


def test_subword_fallback():
    vocab = _vocab(" foot", "ball", " x")
    assert resolve_keyword("football", vocab, {"football": [0, 1]}) == [0, 1]


def test_unresolvable_keyword():
    vocab = _vocab(" a", " b")
    with pytest.raises(UnresolvableLabelError):
        resolve_keyword("zebra", vocab)
    with pytest.raises(UnresolvableLabelError):
        resolve_keyword("zebra", vocab, {"zebra": [5]})  # out of range
    with pytest.raises(UnresolvableLabelError):
        resolve_keyword("", vocab)


def test_embed_label_single_token():
    vocab = _vocab(" a", " b")
    emb = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(embed_label("a", vocab, emb), [1.0, 2.0])


def test_embed_label_subword_mean():
    vocab = _vocab(" fo", "ot", " x")
    emb = np.array([[1.0, 0.0], [0.0, 3.0], [9.0, 9.0]])
    vec = embed_label("foot", vocab, emb, {"foot": [0, 1]})
    np.testing.assert_allclose(vec, [0.5, 1.5])


# --- similarity metrics --------------------------------------------------------

def test_similarity_values():
    u, v = [1.0, 0.0], [0.8, 0.6]
    assert similarity(u, v, SimilarityMetric.COSINE) == pytest.approx(0.8)
    assert similarity(u, v, SimilarityMetric.DOT) == pytest.approx(0.8)
    assert similarity(u, v, SimilarityMetric.NEG_EUCLIDEAN) == pytest.approx(
        -np.sqrt(0.04 + 0.36)
    )


def test_similarity_matches_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        u = rng.standard_normal(6)
        v = rng.standard_normal(6)
        for metric in SimilarityMetric:
            expected = oracles.SIMILARITIES[metric.value](u.tolist(), v.tolist())
            assert similarity(u, v, metric) == pytest.approx(expected, abs=1e-12)


def test_cosine_zero_vector_raises():
    with pytest.raises(DegenerateVectorError):
        similarity([0.0, 0.0], [1.0, 0.0], SimilarityMetric.COSINE)
    with pytest.raises(DegenerateVectorError):
        topk_neighbors([0.0, 0.0], np.eye(2), 1, SimilarityMetric.COSINE)


# --- top-k search ---------------------------------------------------------------

def test_topk_excludes_specials(micro_vocab, micro_emb):
    # <s> sits near everything but is flagged special
    out = topk_neighbors(micro_emb[2], micro_emb, 8, SimilarityMetric.COSINE, micro_vocab)
    ids = [t for t, _ in out]
    assert 0 not in ids and 1 not in ids
    assert ids[0] == 2


def test_topk_tie_breaks_to_smaller_id():
    emb = np.array([[1.0, 0.0], [0.8, 0.6], [0.8, -0.6], [0.0, 1.0]])
    out = topk_neighbors([1.0, 0.0], emb, 3, SimilarityMetric.COSINE)
    assert [t for t, _ in out] == [0, 1, 2]  # 1 and 2 tie at 0.8


def test_topk_similarities_non_increasing():
    rng = np.random.default_rng(3)
    emb = rng.standard_normal((40, 5))
    out = topk_neighbors(rng.standard_normal(5), emb, 40, SimilarityMetric.COSINE)
    sims = [s for _, s in out]
    assert all(a >= b for a, b in zip(sims, sims[1:]))


def test_topk_invalid_k(micro_vocab, micro_emb):
    for k in (0, -1, 9):  # 8 eligible tokens
        with pytest.raises(InvalidKError):
            topk_neighbors(micro_emb[2], micro_emb, k, SimilarityMetric.COSINE, micro_vocab)


def test_topk_matches_oracle_all_metrics():
    rng = np.random.default_rng(11)
    emb = rng.standard_normal((30, 4))
    label = rng.standard_normal(4)
    eligible = list(range(30))
    for metric in SimilarityMetric:
        for k in (1, 5, 30):
            got = topk_neighbors(label, emb, k, metric)
            want = oracles.topk(label.tolist(), emb.tolist(), eligible, k, metric.value)
            assert [t for t, _ in got] == [t for t, _ in want]
            for (_, gs), (_, ws) in zip(got, want):
                assert gs == pytest.approx(ws, abs=1e-9)


# --- weights ---------------------------------------------------------------------

def test_softmax_weights_match_oracle():
    rng = np.random.default_rng(5)
    for _ in range(30):
        sims = rng.standard_normal(rng.integers(1, 12)).tolist()
        got = compute_weights(sims, WeightScheme.SOFTMAX)
        np.testing.assert_allclose(got, oracles.softmax_weights(sims), atol=1e-12)


def test_softmax_weights_shift_invariant():
    sims = [0.9, 0.5, 0.1]
    a = compute_weights(sims, WeightScheme.SOFTMAX)
    b = compute_weights([s + 1000.0 for s in sims], WeightScheme.SOFTMAX)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_softmax_weights_no_overflow():
    w = compute_weights([1e4, 1e4 - 1.0], WeightScheme.SOFTMAX)
    assert np.isfinite(w).all() and w.sum() == pytest.approx(1.0)


def test_uniform_weights():
    np.testing.assert_allclose(
        compute_weights([3.0, -1.0, 0.5], WeightScheme.UNIFORM), [1 / 3] * 3
    )


def test_normalized_similarity_weights():
    got = compute_weights([3.0, 1.0], WeightScheme.NORMALIZED_SIMILARITY)
    np.testing.assert_allclose(got, [0.75, 0.25])


def test_normalized_similarity_rejects_negatives():
    # a negative weight would break the nonnegativity invariant downstream
    with pytest.raises(DegenerateWeightsError):
        compute_weights([2.0, -0.5], WeightScheme.NORMALIZED_SIMILARITY)
    with pytest.raises(DegenerateWeightsError):
        compute_weights([0.0, 0.0], WeightScheme.NORMALIZED_SIMILARITY)


def test_weights_empty_rejected():
    with pytest.raises(DegenerateWeightsError):
        compute_weights([], WeightScheme.SOFTMAX)


# --- verbalizer construction ------------------------------------------------------

def test_build_verbalizer_structure(micro_vocab, micro_emb, micro_specs):
    v = build_verbalizer(micro_specs, micro_vocab, micro_emb, k=2)
    assert v.class_names == ("Sports", "Business", "NaturalPlace")
    assert v.vocab_size == 10
    sports = v.classes[0].entries[0]
    assert sports.token_ids.tolist() == [2, 3]
    assert sports.tokens == (" sports", " game")
    np.testing.assert_allclose(sports.similarities, [1.0, 0.8], atol=1e-12)
    np.testing.assert_allclose(
        sports.weights, oracles.softmax_weights([1.0, 0.8]), atol=1e-12
    )
    natural = v.classes[2]
    assert tuple(e.keyword for e in natural.entries) == ("river", "lake", "mountain")


def test_build_verbalizer_shape_mismatch(micro_vocab, micro_specs):
    with pytest.raises(DataError):
        build_verbalizer(micro_specs, micro_vocab, np.zeros((3, 4)), k=1)


def test_build_verbalizer_logs_overlap(micro_vocab, micro_emb, micro_specs, caplog):
    import logging

    with caplog.at_level(logging.WARNING, logger="npprompt.verbalizer"):
        build_verbalizer(micro_specs, micro_vocab, micro_emb, k=4)
    assert any("share neighbor token ids" in r.message for r in caplog.records)


def test_verbalizer_json_dump(micro_vocab, micro_emb, micro_specs):
    import json

    v = build_verbalizer(micro_specs, micro_vocab, micro_emb, k=2)
    dump = json.loads(v.to_json())
    assert dump[0]["class"] == "Sports"
    first = dump[0]["keywords"][0]["neighbors"][0]
    assert first == {"token": " sports", "id": 2, "similarity": 1.0, "weight": pytest.approx(0.5498339973124778)}


# --- whitening -------------------------------------------------------------------

def test_whitening_zero_mean_unit_cov():
    rng = np.random.default_rng(21)
    sample = rng.standard_normal((300, 6)) @ rng.standard_normal((6, 6)) + rng.standard_normal(6)
    transform = fit_whitening(sample)
    whitened = whiten(sample, transform)
    np.testing.assert_allclose(whitened.mean(axis=0), np.zeros(6), atol=1e-10)
    cov = whitened.T @ whitened / whitened.shape[0]
    np.testing.assert_allclose(cov, np.eye(6), atol=1e-8)


def test_whitening_is_affine_linear():
    # whiten(mean of rows) == mean of whitened rows, so multi-token labels
    # can average either before or after the transform
    rng = np.random.default_rng(22)
    sample = rng.standard_normal((50, 4))
    transform = fit_whitening(sample)
    rows = rng.standard_normal((7, 4))
    np.testing.assert_allclose(
        whiten(rows.mean(axis=0), transform),
        whiten(rows, transform).mean(axis=0),
        atol=1e-12,
    )


def test_whitening_rank_deficient_sample():
    # one dimension is constant; the eigenvalue floor keeps the map finite
    rng = np.random.default_rng(23)
    sample = rng.standard_normal((100, 3))
    sample[:, 2] = 4.2
    transform = fit_whitening(sample)
    assert np.isfinite(transform.transform).all()
    whitened = whiten(sample, transform)
    assert np.isfinite(whitened).all()
    np.testing.assert_allclose(whitened[:, :].mean(axis=0), np.zeros(3), atol=1e-9)


def test_whitening_needs_two_samples():
    with pytest.raises(WhiteningError):
        fit_whitening(np.ones((1, 3)))
    with pytest.raises(WhiteningError):
        fit_whitening(np.ones(3))


def test_whitening_dimension_mismatch():
    transform = fit_whitening(np.random.default_rng(1).standard_normal((10, 3)))
    with pytest.raises(WhiteningError):
        whiten(np.ones(4), transform)


def test_whitening_hand_example():
    # sample {0, 2}: mean 1, population variance 1, so the map is x - 1
    transform = fit_whitening(np.array([[0.0], [2.0]]))
    np.testing.assert_allclose(transform.mean, [1.0])
    np.testing.assert_allclose(transform.transform, [[1.0]])
    np.testing.assert_allclose(whiten(np.array([3.0]), transform), [2.0])


def test_label_spec_rejects_empty():
    with pytest.raises(ValueError):
        LabelSpec("X", ())
    with pytest.raises(ValueError):
        LabelSpec("X", ("ok", ""))
