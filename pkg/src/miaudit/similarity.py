"""Patch-wise similarity between query and generated embeddings.

Each query/generated pair yields a k-vector of per-patch scores; the m
generated images of one record are aggregated element-wise (mean or median)
into the record's similarity profile, the feature every attack consumes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, ShapeError, ValidationError
from .records import EmbeddingMatrix, QueryRecord


class Metric(str, enum.Enum):
    COSINE = "cosine"
    L1 = "l1"
    L2 = "l2"
    HAMMING = "hamming"

    @property
    def higher_is_similar(self) -> bool:
        # cosine and hamming are reported as similarities, l1/l2 as distances
        return self in (Metric.COSINE, Metric.HAMMING)


class Aggregator(str, enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"


@dataclass(frozen=True)
class SimilarityProfile:
    """Per-patch aggregated similarity scores for one record."""

    record_id: str
    scores: np.ndarray  # float64, shape (k,)
    metric: Metric
    aggregator: Aggregator
    m: int
    label: int | None = None

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1:
            raise ShapeError(f"profile scores must be 1-dimensional, got {scores.shape}")
        if not np.all(np.isfinite(scores)):
            raise ValidationError(f"profile {self.record_id!r} contains non-finite scores")
        scores = scores.copy()
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    @property
    def k(self) -> int:
        return self.scores.shape[0]


def patch_scores(
    q: EmbeddingMatrix, g: EmbeddingMatrix, metric: Metric = Metric.COSINE
) -> np.ndarray:
    """Score each patch row of q against the same row of g.

    cosine: dot/(|a||b|); l1: sum|a-b|; l2: sqrt(sum (a-b)^2);
    hamming: 1 - fraction of coordinates whose signs differ (reported as
    similarity, sign-binarized at zero).
    """
    if q.shape != g.shape:
        raise ShapeError(f"shape mismatch: query {q.shape} vs generated {g.shape}")
    a = q.values.astype(np.float64)
    b = g.values.astype(np.float64)
    metric = Metric(metric)
    if metric is Metric.COSINE:
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        for name, norms in (("query", na), ("generated", nb)):
            zero = np.flatnonzero(norms == 0.0)
            if zero.size:
                raise DegenerateDataError(
                    f"zero-norm {name} row at patch index {int(zero[0])}; "
                    "cosine similarity is undefined"
                )
        return np.einsum("kd,kd->k", a, b) / (na * nb)
    if metric is Metric.L1:
        return np.abs(a - b).sum(axis=1)
    if metric is Metric.L2:
        return np.sqrt(((a - b) ** 2).sum(axis=1))
    if metric is Metric.HAMMING:
        differs = (a < 0.0) != (b < 0.0)
        return 1.0 - differs.mean(axis=1)
    raise ValidationError(f"unknown metric {metric!r}")


def aggregate(vectors: list[np.ndarray], agg: Aggregator = Aggregator.MEAN) -> np.ndarray:
    """Element-wise mean or median over m k-vectors.

    Summation order for the mean is canonicalized by lexicographic row order,
    so permuting the inputs leaves the result bit-identical.
    """
    if not vectors:
        raise ValidationError("cannot aggregate an empty list of score vectors")
    shape = np.asarray(vectors[0], dtype=np.float64).shape
    if len(shape) != 1:
        raise ShapeError("score vectors must all be 1-dimensional")
    for v in vectors[1:]:
        if np.asarray(v).shape != shape:
            raise ShapeError("score vectors must all have the same length")
    stack = np.asarray(vectors, dtype=np.float64)
    agg = Aggregator(agg)
    if stack.shape[0] == 1:
        return stack[0].copy()
    if agg is Aggregator.MEDIAN:
        return np.median(stack, axis=0)
    order = np.lexsort(stack.T[::-1])
    result = stack[order].sum(axis=0) / stack.shape[0]
    # mean of identical values is that value; repair float rounding exactly
    constant = np.all(stack == stack[0], axis=0)
    result[constant] = stack[0][constant]
    return result


def profile(
    record: QueryRecord,
    metric: Metric = Metric.COSINE,
    agg: Aggregator = Aggregator.MEAN,
) -> SimilarityProfile:
    """Aggregate patch scores over the record's m generated embeddings."""
    vectors = [patch_scores(record.query_embedding, g, metric) for g in record.generated_embeddings]
    return SimilarityProfile(
        record_id=record.id,
        scores=aggregate(vectors, agg),
        metric=Metric(metric),
        aggregator=Aggregator(agg),
        m=record.m,
        label=record.label,
    )


def scalar_score(p: SimilarityProfile) -> float:
    """Mean over the k patch scores, normalized so larger means more similar.

    Distance metrics (l1/l2) are negated; similarity metrics pass through.
    """
    mean = float(np.mean(p.scores))
    return mean if p.metric.higher_is_similar else -mean
