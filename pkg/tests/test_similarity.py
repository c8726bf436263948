"""Similarity engine: patch scores, aggregation, scalar scores."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from miaudit import (
    Aggregator,
    DegenerateDataError,
    EmbeddingMatrix,
    Metric,
    QueryRecord,
    ShapeError,
    SimilarityProfile,
    ValidationError,
    aggregate,
    patch_scores,
    profile,
    scalar_score,
)

finite_floats = st.floats(
    min_value=-100.0, max_value=100.0, allow_nan=False, allow_infinity=False, width=32
)


def emb(rows):
    return EmbeddingMatrix(np.asarray(rows, dtype=np.float32))


def embedding_pairs(min_k=1, max_k=4, min_d=1, max_d=5):
    return st.integers(min_k, max_k).flatmap(
        lambda k: st.integers(min_d, max_d).flatmap(
            lambda d: st.tuples(
                arrays(np.float32, (k, d), elements=finite_floats),
                arrays(np.float32, (k, d), elements=finite_floats),
            )
        )
    )


class TestPatchScores:
    def test_identical_unit_rows_cosine(self):
        q = emb([[1.0, 0.0], [0.0, 1.0]])
        assert np.allclose(patch_scores(q, q, Metric.COSINE), [1.0, 1.0])

    def test_orthogonal_rows_cosine(self):
        q = emb([[1.0, 0.0]])
        g = emb([[0.0, 1.0]])
        assert patch_scores(q, g, Metric.COSINE)[0] == pytest.approx(0.0)

    def test_hamming_hand_enumerated(self):
        # signs (+,-) vs (+,+): one of two coordinates differs
        q = emb([[0.5, -0.2]])
        g = emb([[0.1, 0.3]])
        assert patch_scores(q, g, Metric.HAMMING)[0] == pytest.approx(0.5)

    def test_l1_l2_hand_values(self):
        q = emb([[1.0, 2.0]])
        g = emb([[4.0, 6.0]])
        assert patch_scores(q, g, Metric.L1)[0] == pytest.approx(7.0)
        assert patch_scores(q, g, Metric.L2)[0] == pytest.approx(5.0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            patch_scores(emb([[1.0, 0.0]]), emb([[1.0, 0.0, 0.0]]), Metric.COSINE)

    def test_zero_norm_row_names_patch(self):
        q = emb([[1.0, 0.0], [0.0, 0.0]])
        g = emb([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(DegenerateDataError, match="patch index 1"):
            patch_scores(q, g, Metric.COSINE)

    @settings(max_examples=100, deadline=None)
    @given(embedding_pairs(), st.sampled_from(list(Metric)))
    def test_symmetry(self, pair, metric):
        a, b = pair
        if metric is Metric.COSINE:
            # keep rows away from zero norm
            a = a + np.where(np.linalg.norm(a, axis=1, keepdims=True) < 1e-3, 1.0, 0.0).astype(
                np.float32
            )
            b = b + np.where(np.linalg.norm(b, axis=1, keepdims=True) < 1e-3, 1.0, 0.0).astype(
                np.float32
            )
        sa = patch_scores(emb(a), emb(b), metric)
        sb = patch_scores(emb(b), emb(a), metric)
        np.testing.assert_allclose(sa, sb, rtol=1e-12, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(
        embedding_pairs(min_d=2),
        st.floats(min_value=0.25, max_value=8.0, allow_nan=False),
    )
    def test_scale_behavior(self, pair, alpha):
        a, b = pair
        a = a + np.where(np.linalg.norm(a, axis=1, keepdims=True) < 1e-2, 1.0, 0.0).astype(np.float32)
        b = b + np.where(np.linalg.norm(b, axis=1, keepdims=True) < 1e-2, 1.0, 0.0).astype(np.float32)
        cos = patch_scores(emb(a), emb(b), Metric.COSINE)
        cos_scaled = patch_scores(emb(alpha * a), emb(b), Metric.COSINE)
        np.testing.assert_allclose(cos, cos_scaled, rtol=1e-5, atol=1e-6)
        l2 = patch_scores(emb(a), emb(b), Metric.L2)
        l2_scaled = patch_scores(emb(alpha * a), emb(alpha * b), Metric.L2)
        np.testing.assert_allclose(alpha * l2, l2_scaled, rtol=1e-4, atol=1e-4)

    def test_cosine_range(self):
        rng = np.random.default_rng(0)
        q = emb(rng.standard_normal((20, 6)))
        g = emb(rng.standard_normal((20, 6)))
        s = patch_scores(q, g, Metric.COSINE)
        assert np.all(s >= -1.0 - 1e-12) and np.all(s <= 1.0 + 1e-12)


class TestAggregate:
    def test_mean_hand_value(self):
        out = aggregate([np.array([1.0, 3.0]), np.array([3.0, 5.0])], Aggregator.MEAN)
        np.testing.assert_array_equal(out, [2.0, 4.0])

    def test_m1_identity_both_aggregators(self):
        v = np.array([0.1, 0.7, -0.3])
        np.testing.assert_array_equal(aggregate([v], Aggregator.MEAN), v)
        np.testing.assert_array_equal(aggregate([v], Aggregator.MEDIAN), v)

    def test_median_sorted_by_hand(self):
        vecs = [np.array([1.0]), np.array([100.0]), np.array([2.0])]
        assert aggregate(vecs, Aggregator.MEDIAN)[0] == 2.0

    def test_even_m_median_averages_central_pair(self):
        vecs = [np.array([1.0]), np.array([2.0]), np.array([10.0]), np.array([20.0])]
        assert aggregate(vecs, Aggregator.MEDIAN)[0] == 6.0

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            aggregate([], Aggregator.MEAN)

    @settings(max_examples=100, deadline=None)
    @given(
        arrays(np.float64, 3, elements=st.floats(-1e6, 1e6, allow_nan=False)),
        st.integers(2, 6),
        st.sampled_from(list(Aggregator)),
    )
    def test_identical_vectors_aggregate_to_themselves_exactly(self, v, m, agg):
        out = aggregate([v.copy() for _ in range(m)], agg)
        np.testing.assert_array_equal(out, v)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(arrays(np.float64, 4, elements=st.floats(-1e3, 1e3, allow_nan=False)), min_size=2, max_size=5),
        st.randoms(use_true_random=False),
    )
    def test_mean_permutation_bit_identical(self, vecs, rnd):
        base = aggregate(vecs, Aggregator.MEAN)
        shuffled = list(vecs)
        rnd.shuffle(shuffled)
        out = aggregate(shuffled, Aggregator.MEAN)
        np.testing.assert_array_equal(out, base)


class TestProfile:
    def record(self, k=3, d=4, m=2, seed=0, identical=False):
        rng = np.random.default_rng(seed)
        q = rng.standard_normal((k, d)).astype(np.float32)
        gens = [q.copy() if identical else rng.standard_normal((k, d)).astype(np.float32) for _ in range(m)]
        return QueryRecord(
            id="rec",
            query_embedding=EmbeddingMatrix(q),
            generated_embeddings=tuple(EmbeddingMatrix(g) for g in gens),
            label=1,
        )

    def test_identical_generated_gives_all_ones_cosine(self):
        p = profile(self.record(m=2, identical=True), Metric.COSINE, Aggregator.MEAN)
        np.testing.assert_allclose(p.scores, 1.0, atol=1e-6)

    def test_profile_equals_composed_ops(self):
        rec = self.record(m=3, seed=5)
        p = profile(rec, Metric.L2, Aggregator.MEAN)
        vectors = [patch_scores(rec.query_embedding, g, Metric.L2) for g in rec.generated_embeddings]
        np.testing.assert_array_equal(p.scores, aggregate(vectors, Aggregator.MEAN))
        assert p.m == 3
        assert p.label == 1

    def test_degenerate_row_propagates(self):
        q = np.zeros((2, 3), dtype=np.float32)
        q[0, 0] = 1.0
        rec = QueryRecord(
            id="zq",
            query_embedding=EmbeddingMatrix(q),
            generated_embeddings=(EmbeddingMatrix(np.ones((2, 3), dtype=np.float32)),),
        )
        with pytest.raises(DegenerateDataError, match="patch index"):
            profile(rec, Metric.COSINE, Aggregator.MEAN)


class TestScalarScore:
    def prof(self, scores, metric=Metric.COSINE):
        return SimilarityProfile(
            record_id="p", scores=np.asarray(scores, dtype=np.float64),
            metric=metric, aggregator=Aggregator.MEAN, m=1,
        )

    def test_all_ones_cosine(self):
        assert scalar_score(self.prof([1.0, 1.0, 1.0])) == 1.0

    def test_l2_negation_convention(self):
        assert scalar_score(self.prof([1.0, 3.0], Metric.L2)) == -2.0

    def test_matches_independent_mean(self):
        rng = np.random.default_rng(9)
        scores = rng.uniform(-1, 1, size=17)
        expected = float(np.mean(scores))  # independent recomputation
        assert scalar_score(self.prof(scores)) == pytest.approx(expected, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, 5, elements=st.floats(-10, 10, allow_nan=False)),
        st.integers(0, 4),
        st.floats(min_value=0.001, max_value=5.0),
        st.sampled_from(list(Metric)),
    )
    def test_monotone_in_every_patch(self, scores, idx, bump, metric):
        p0 = self.prof(scores, metric)
        raised = scores.copy()
        raised[idx] += bump
        p1 = self.prof(raised, metric)
        if metric.higher_is_similar:
            assert scalar_score(p1) >= scalar_score(p0)
        else:
            assert scalar_score(p1) <= scalar_score(p0)
