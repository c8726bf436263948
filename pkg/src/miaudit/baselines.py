"""Traditional black-box baselines adapted to embedding data.

These operate on patch-mean-pooled d-vectors (whole-sample distances), the
minimal faithful adaptation of the classic Monte-Carlo neighborhood count
and GAN-Leaks reconstruction-distance attacks. They are here for head-to-head
comparison; at small sample budgets they are expected to hover near chance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .records import EmbeddingMatrix
from .similarity import Metric

BASELINE_KINDS = ("monte_carlo", "gan_leaks", "min_distance")


@dataclass(frozen=True)
class BaselineConfig:
    epsilon: float
    sample_budget: int = 3
    metric: Metric = Metric.L2

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be > 0")
        if self.sample_budget < 1:
            raise ValidationError("sample_budget must be >= 1")
        object.__setattr__(self, "metric", Metric(self.metric))


def pooled(matrix: EmbeddingMatrix) -> np.ndarray:
    """Patch-mean pooling: average the k patch rows into one d-vector."""
    return matrix.values.astype(np.float64).mean(axis=0)


def pooled_distance(a: np.ndarray, b: np.ndarray, metric: Metric = Metric.L2) -> float:
    """Whole-sample distance between two pooled vectors (always >= 0)."""
    if a.shape != b.shape:
        raise ShapeError(f"pooled vector shape mismatch: {a.shape} vs {b.shape}")
    metric = Metric(metric)
    if metric is Metric.L1:
        return float(np.abs(a - b).sum())
    if metric is Metric.L2:
        return float(np.linalg.norm(a - b))
    if metric is Metric.COSINE:
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            raise ValidationError("cosine distance undefined for zero-norm pooled vector")
        return float(1.0 - np.dot(a, b) / (na * nb))
    return float(np.mean((a < 0.0) != (b < 0.0)))


def _distances(
    query: EmbeddingMatrix, samples: list[EmbeddingMatrix], metric: Metric
) -> np.ndarray:
    if not samples:
        raise ValidationError("baseline attacks need at least one generated sample")
    pq = pooled(query)
    return np.array([pooled_distance(pq, pooled(s), metric) for s in samples])


def monte_carlo_score(
    query: EmbeddingMatrix, samples: list[EmbeddingMatrix], cfg: BaselineConfig
) -> float:
    """Fraction of samples within the epsilon-neighborhood of the query."""
    d = _distances(query, samples, cfg.metric)
    return float(np.mean(d <= cfg.epsilon))


def gan_leaks_score(
    query: EmbeddingMatrix, samples: list[EmbeddingMatrix], cfg: BaselineConfig
) -> float:
    """Mean of exp(-distance); higher = member evidence."""
    d = _distances(query, samples, cfg.metric)
    return float(np.mean(np.exp(-d)))


def min_distance_score(
    query: EmbeddingMatrix, samples: list[EmbeddingMatrix], cfg: BaselineConfig
) -> float:
    """Negated shortest distance to any sample; higher = member evidence."""
    d = _distances(query, samples, cfg.metric)
    return float(-d.min())


def calibrate_epsilon(
    queries: list[EmbeddingMatrix], metric: Metric = Metric.L2
) -> float:
    """Data-driven default epsilon: median pairwise distance among pooled
    query vectors (computed on shadow non-members in the pipeline)."""
    if len(queries) < 2:
        raise ValidationError("need at least 2 queries to calibrate epsilon")
    vecs = np.stack([pooled(q) for q in queries])
    dists = []
    for i in range(len(vecs)):
        for j in range(i + 1, len(vecs)):
            dists.append(pooled_distance(vecs[i], vecs[j], metric))
    eps = float(np.median(dists))
    if eps <= 0.0:
        raise ValidationError("calibrated epsilon is not positive; queries are degenerate")
    return eps
