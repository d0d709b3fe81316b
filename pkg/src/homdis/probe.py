"""Centroid probing: classify raw embeddings by dot product with class means.

No trained classifier is involved; this tests what the embeddings encode
by themselves. The decision rule is the plain dot product (cosine is
available behind a flag but is not the default). Note the dot product is
not translation invariant: shifting all vectors by a constant can change
results.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedio import AggregationStrategy, EmbeddingRecord, aggregate_pieces
from .errors import CorruptionError, FitError, ShapeError
from .tinynn import load_checkpoint, save_checkpoint


@dataclass
class CentroidModel:
    label_ids: list[int]     # ascending
    centroids: np.ndarray    # (len(label_ids), dim), float64

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])


def fit_centroids(
    records: Sequence[tuple[EmbeddingRecord, int]],
    aggregation: AggregationStrategy,
) -> CentroidModel:
    """Per-label elementwise mean of the aggregated vectors."""
    if not records:
        raise FitError("cannot fit centroids from an empty record list")
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for record, label in records:
        vec = aggregate_pieces(record, aggregation)
        if label in sums:
            sums[label] += vec
            counts[label] += 1
        else:
            sums[label] = vec.copy()
            counts[label] = 1
    labels = sorted(sums)
    centroids = np.stack([sums[l] / counts[l] for l in labels])
    return CentroidModel(label_ids=labels, centroids=centroids)


def centroid_scores(
    model: CentroidModel,
    record: EmbeddingRecord,
    aggregation: AggregationStrategy,
    metric: str = "dot",
) -> np.ndarray:
    """Score the record against every centroid, in label_ids order."""
    if record.dim != model.dim:
        raise ShapeError(
            f"record dim {record.dim} does not match centroid dim {model.dim}"
        )
    x = aggregate_pieces(record, aggregation)
    if metric == "dot":
        return model.centroids @ x
    if metric == "cosine":
        x_norm = np.linalg.norm(x)
        c_norms = np.linalg.norm(model.centroids, axis=1)
        denom = c_norms * x_norm
        scores = model.centroids @ x
        return np.where(denom > 0, scores / np.where(denom > 0, denom, 1.0), 0.0)
    raise ValueError(f"unknown metric {metric!r}")


def classify_centroid(
    model: CentroidModel,
    record: EmbeddingRecord,
    aggregation: AggregationStrategy,
    metric: str = "dot",
) -> int:
    """Label of the best-scoring centroid; ties go to the lower label id."""
    scores = centroid_scores(model, record, aggregation, metric)
    return model.label_ids[int(np.argmax(scores))]


def save_centroid_model(model: CentroidModel, path: str | Path) -> None:
    save_checkpoint(
        path,
        {"centroids": model.centroids},
        {"kind": "centroid_model", "label_ids": model.label_ids},
    )


def load_centroid_model(path: str | Path) -> CentroidModel:
    arrays, meta = load_checkpoint(path)
    if meta.get("kind") != "centroid_model":
        raise CorruptionError(
            f"checkpoint kind {meta.get('kind')!r} is not a centroid model"
        )
    return CentroidModel(
        label_ids=[int(l) for l in meta["label_ids"]],
        centroids=arrays["centroids"],
    )
