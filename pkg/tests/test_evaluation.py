"""Metrics: ROC construction, AUC, ASR, TPR at fixed FPR, reports."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from miaudit import ValidationError, asr, auc, report, roc, tpr_at_fpr
from miaudit.evaluation import best_threshold_asr, roc_to_csv


def pair_counting_auc(scores):
    """O(n^2) oracle: Pr[member > non-member] + 0.5 Pr[tie]."""
    members = [s for s, l in scores if l == 1]
    nonmembers = [s for s, l in scores if l == 0]
    total = 0.0
    for m in members:
        for n in nonmembers:
            if m > n:
                total += 1.0
            elif m == n:
                total += 0.5
    return total / (len(members) * len(nonmembers))


def brute_force_roc_points(scores):
    """Oracle: evaluate the confusion matrix at every distinct cutoff."""
    values = sorted({s for s, _ in scores}, reverse=True)
    n_pos = sum(1 for _, l in scores if l == 1)
    n_neg = len(scores) - n_pos
    points = {(0.0, 0.0), (1.0, 1.0)}
    for cut in values:
        tp = sum(1 for s, l in scores if l == 1 and s >= cut)
        fp = sum(1 for s, l in scores if l == 0 and s >= cut)
        points.add((fp / n_neg, tp / n_pos))
    return points


class TestRoc:
    def test_perfect_separation_passes_through_0_1(self):
        scores = [(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)]
        curve = roc(scores)
        assert (0.0, 1.0) in curve.points

    def test_all_tied_collapses_to_diagonal_endpoints(self):
        scores = [(0.5, 1), (0.5, 0), (0.5, 1), (0.5, 0)]
        curve = roc(scores)
        assert curve.points == ((0.0, 0.0), (1.0, 1.0))

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            roc([(0.5, 1), (0.6, 1)])

    def test_starts_at_origin_with_inf_threshold(self):
        curve = roc([(0.3, 1), (0.1, 0)])
        assert curve.points[0] == (0.0, 0.0)
        assert math.isinf(curve.thresholds[0])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10_000))
    def test_matches_confusion_matrix_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 12))
        scores = [(float(rng.choice([0.1, 0.3, 0.5, 0.7, 0.9])), int(rng.integers(0, 2))) for _ in range(n)]
        labels = {l for _, l in scores}
        if labels != {0, 1}:
            scores += [(0.2, 0), (0.8, 1)]
        curve = roc(scores)
        assert set(curve.points) == brute_force_roc_points(scores)


class TestAuc:
    def test_perfect_separation(self):
        assert auc(roc([(0.9, 1), (0.1, 0)])) == 1.0

    def test_all_tied_is_half(self):
        assert auc(roc([(0.5, 1), (0.5, 0)])) == 0.5

    def test_reversed_scores_give_zero(self):
        assert auc(roc([(0.1, 1), (0.9, 0)])) == 0.0

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 100_000))
    def test_trapezoid_equals_pair_counting(self, seed):
        rng = np.random.default_rng(seed)
        n_pos = int(rng.integers(1, 51))
        n_neg = int(rng.integers(1, 51))
        # draw from a coarse grid so ties actually happen
        vals = rng.choice(np.linspace(0, 1, 7), size=n_pos + n_neg)
        scores = [(float(v), 1) for v in vals[:n_pos]] + [(float(v), 0) for v in vals[n_pos:]]
        assert auc(roc(scores)) == pytest.approx(pair_counting_auc(scores), abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_invariant_under_monotone_transform(self, seed):
        rng = np.random.default_rng(seed)
        scores = [(float(s), int(l)) for s, l in zip(rng.uniform(0, 1, 20), rng.integers(0, 2, 20))]
        if len({l for _, l in scores}) < 2:
            scores += [(0.5, 0), (0.6, 1)]
        base = auc(roc(scores))
        transformed = [(math.exp(3.0 * s) + 7.0, l) for s, l in scores]
        assert auc(roc(transformed)) == pytest.approx(base, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_negation_complements(self, seed):
        rng = np.random.default_rng(seed)
        scores = [(float(s), int(l)) for s, l in zip(rng.uniform(0, 1, 16), rng.integers(0, 2, 16))]
        if len({l for _, l in scores}) < 2:
            scores += [(0.25, 0), (0.75, 1)]
        negated = [(-s, l) for s, l in scores]
        assert auc(roc(scores)) + auc(roc(negated)) == pytest.approx(1.0, abs=1e-12)


class TestAsr:
    def test_all_correct(self):
        assert asr([(1, 1), (0, 0)] * 5) == 1.0

    def test_complement_bits(self):
        assert asr([(0, 1), (1, 0)] * 5) == 0.0

    def test_six_of_ten(self):
        decisions = [(1, 1)] * 3 + [(0, 1)] * 2 + [(0, 0)] * 3 + [(1, 0)] * 2
        assert asr(decisions) == pytest.approx(0.6)

    def test_imbalance_rejected_by_default(self):
        with pytest.raises(ValidationError, match="unbalanced"):
            asr([(1, 1), (1, 1), (0, 0)])

    def test_imbalance_allowed_with_flag(self):
        assert asr([(1, 1), (1, 1), (0, 0)], allow_unbalanced=True) == 1.0


class TestTprAtFpr:
    def test_perfect_separation_at_one_percent(self):
        curve = roc([(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)])
        assert tpr_at_fpr(curve, 0.01) == 1.0

    def test_all_tied_at_one_percent(self):
        curve = roc([(0.5, 1), (0.5, 0)])
        assert tpr_at_fpr(curve, 0.01) == 0.0  # only (0,0) qualifies

    def test_hand_built_curve(self):
        # points: (0,0) -> (0,0.5) -> (0.5,0.5) -> (0.5,1) -> (1,1)
        scores = [(0.9, 1), (0.5, 0), (0.4, 1), (0.1, 0)]
        curve = roc(scores)
        assert tpr_at_fpr(curve, 0.0) == 0.5
        assert tpr_at_fpr(curve, 0.5) == 1.0
        assert tpr_at_fpr(curve, 0.49) == 0.5

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_nondecreasing_in_target(self, t1, t2):
        curve = roc([(0.9, 1), (0.6, 0), (0.5, 1), (0.2, 0)])
        lo, hi = min(t1, t2), max(t1, t2)
        assert tpr_at_fpr(curve, lo) <= tpr_at_fpr(curve, hi)


class TestReport:
    def perfect_inputs(self):
        scores = [(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)]
        decisions = [(1, 1), (1, 1), (0, 0), (0, 0)]
        return scores, decisions

    def test_perfect_attack_metrics(self):
        scores, decisions = self.perfect_inputs()
        rep, _ = report("threshold", scores, decisions, seed=1, config_digest="d")
        assert rep.asr == 1.0
        assert rep.auc == 1.0
        assert dict(rep.tpr_at_fpr)[0.01] == 1.0

    def test_deterministic_json(self):
        scores, decisions = self.perfect_inputs()
        rep1, _ = report("classifier", scores, decisions, seed=1, config_digest="d")
        rep2, _ = report("classifier", scores, decisions, seed=1, config_digest="d")
        assert rep1.to_json() == rep2.to_json()

    def test_fields_match_independent_computation(self):
        rng = np.random.default_rng(4)
        scores = [(float(s), int(l)) for s, l in zip(rng.uniform(0, 1, 20), [1, 0] * 10)]
        decisions = [(int(s > 0.5), l) for s, l in scores]
        rep, curve = report("distribution", scores, decisions, seed=2, config_digest="x")
        assert rep.auc == pytest.approx(pair_counting_auc(scores), abs=1e-12)
        expected_asr = np.mean([b == l for b, l in decisions])
        assert rep.asr == pytest.approx(expected_asr)
        assert rep.n_members == 10 and rep.n_nonmembers == 10

    def test_one_percent_target_always_present(self):
        scores, decisions = self.perfect_inputs()
        rep, _ = report("t", scores, decisions, seed=0, config_digest="d", fpr_targets=(0.5,))
        assert 0.01 in dict(rep.tpr_at_fpr)

    def test_best_threshold_asr_is_optimistic(self):
        rng = np.random.default_rng(7)
        scores = [(float(s), int(l)) for s, l in zip(rng.uniform(0, 1, 30), [1, 0] * 15)]
        decisions = [(int(s > 0.9), l) for s, l in scores]  # poor native cutoff
        rep, _ = report(
            "t", scores, decisions, seed=0, config_digest="d", with_best_threshold_asr=True
        )
        assert rep.asr_best_threshold >= rep.asr

    def test_csv_format(self):
        scores, _ = self.perfect_inputs()
        curve = roc(scores)
        csv = roc_to_csv(curve)
        lines = csv.strip().split("\n")
        assert lines[0] == "threshold,fpr,tpr"
        assert lines[1].startswith("inf,")
        assert len(lines) == 1 + len(curve.points)


class TestBestThresholdAsr:
    def test_brute_force_agreement(self):
        rng = np.random.default_rng(11)
        scores = [(float(s), int(l)) for s, l in zip(rng.uniform(0, 1, 15), rng.integers(0, 2, 15))]
        # oracle: accuracy at every cutoff in a dense grid including the scores
        grid = sorted({s for s, _ in scores})
        cands = [g - 1e-9 for g in grid] + grid + [g + 1e-9 for g in grid]
        oracle = max(
            np.mean([(1 if s >= c else 0) == l for s, l in scores]) for c in cands
        )
        assert best_threshold_asr(scores) == pytest.approx(oracle)
