"""Centroid probing: fit, dot-product classification, invariances."""

import numpy as np
import pytest

from homdis.embedio import AggregationStrategy, EmbeddingRecord
from homdis.errors import FitError, ShapeError
from homdis.probe import (
    CentroidModel,
    centroid_scores,
    classify_centroid,
    fit_centroids,
    load_centroid_model,
    save_centroid_model,
)

FIRST = AggregationStrategy.FIRST


def _rec(vec, sid="r"):
    return EmbeddingRecord(sid, np.asarray([vec], dtype=np.float32), False)


def test_fit_mean_oracle():
    records = [
        (_rec([0, 0], "a"), 0),
        (_rec([2, 2], "b"), 0),
        (_rec([4, 0], "c"), 1),
    ]
    model = fit_centroids(records, FIRST)
    assert model.label_ids == [0, 1]
    assert np.array_equal(model.centroids[0], [1.0, 1.0])
    assert np.array_equal(model.centroids[1], [4.0, 0.0])


def test_fit_single_record_equals_that_vector():
    model = fit_centroids([(_rec([3, -1, 2]), 5)], FIRST)
    assert model.label_ids == [5]
    assert np.array_equal(model.centroids[0], [3.0, -1.0, 2.0])


def test_fit_identical_records_identical_centroids():
    records = [(_rec([1, 1]), 0), (_rec([1, 1]), 1), (_rec([1, 1]), 2)]
    model = fit_centroids(records, FIRST)
    assert np.array_equal(model.centroids[0], model.centroids[1])
    assert np.array_equal(model.centroids[1], model.centroids[2])


def test_fit_empty_error():
    with pytest.raises(FitError):
        fit_centroids([], FIRST)


def test_classify_dominant_coordinate():
    model = CentroidModel(label_ids=[0, 1], centroids=np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert classify_centroid(model, _rec([0.9, 0.1]), FIRST) == 0
    assert classify_centroid(model, _rec([0.1, 0.9]), FIRST) == 1


def test_classify_all_zero_scores_ties_to_lowest_label():
    model = CentroidModel(label_ids=[2, 5], centroids=np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert classify_centroid(model, _rec([0.0, 0.0]), FIRST) == 2


def test_classify_scaling_invariance_randomized():
    rng = np.random.default_rng(1)
    for _ in range(100):
        dim = int(rng.integers(1, 9))
        labels = sorted(rng.choice(20, size=int(rng.integers(2, 5)), replace=False))
        model = CentroidModel(
            label_ids=[int(l) for l in labels],
            centroids=rng.normal(size=(len(labels), dim)),
        )
        query = _rec(rng.normal(size=dim))
        base = classify_centroid(model, query, FIRST)
        for scale in (0.5, 3.0, 1e3):
            scaled = CentroidModel(
                label_ids=model.label_ids, centroids=model.centroids * scale
            )
            assert classify_centroid(scaled, query, FIRST) == base
            scaled_query = _rec(np.asarray(query.pieces[0], dtype=np.float64) * scale)
            assert classify_centroid(model, scaled_query, FIRST) == base


def test_two_singleton_classes_reduce_to_sign_comparison():
    rng = np.random.default_rng(2)
    for _ in range(100):
        dim = int(rng.integers(1, 8))
        c0 = rng.normal(size=dim)
        c1 = rng.normal(size=dim)
        model = fit_centroids([(_rec(c0), 0), (_rec(c1), 1)], FIRST)
        x = rng.normal(size=dim)
        got = classify_centroid(model, _rec(x), FIRST)
        # float32 storage quantizes the centroids; use the same quantization
        q0 = c0.astype(np.float32).astype(np.float64)
        q1 = c1.astype(np.float32).astype(np.float64)
        xq = np.asarray(_rec(x).pieces[0], dtype=np.float64)
        expected = 1 if xq @ (q1 - q0) > 0 else 0
        assert got == expected


def test_dim_mismatch_shape_error():
    model = CentroidModel(label_ids=[0], centroids=np.zeros((1, 3)))
    with pytest.raises(ShapeError):
        classify_centroid(model, _rec([1.0, 2.0]), FIRST)


def test_cosine_metric_differs_from_dot_when_norms_skewed():
    # dot favors the long centroid; cosine favors the aligned one
    model = CentroidModel(
        label_ids=[0, 1],
        centroids=np.array([[10.0, 0.0], [0.0, 0.1]]),
    )
    query = _rec([0.05, 1.0])
    assert classify_centroid(model, query, FIRST, metric="dot") == 0
    assert classify_centroid(model, query, FIRST, metric="cosine") == 1


def test_scores_order_matches_labels():
    model = CentroidModel(label_ids=[1, 4], centroids=np.array([[1.0, 0.0], [0.0, 1.0]]))
    scores = centroid_scores(model, _rec([2.0, 3.0]), FIRST)
    assert scores[0] == pytest.approx(2.0)
    assert scores[1] == pytest.approx(3.0)


def test_centroid_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    model = CentroidModel(label_ids=[0, 1, 2], centroids=rng.normal(size=(3, 6)))
    path = tmp_path / "cent.hnc"
    save_centroid_model(model, path)
    loaded = load_centroid_model(path)
    assert loaded.label_ids == model.label_ids
    assert loaded.centroids.tobytes() == model.centroids.tobytes()
