"""Attack metrics: ASR, ROC curve, AUC, TPR at low FPR, and report emission."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError

DEFAULT_FPR_TARGETS = (0.001, 0.01, 0.05, 0.1)


@dataclass(frozen=True)
class RocCurve:
    """Step curve from (0,0) to (1,1); tied scores move as one group."""

    points: tuple[tuple[float, float], ...]  # (fpr, tpr)
    thresholds: tuple[float, ...]  # score cutoff per point; +inf at (0,0)

    def __post_init__(self):
        if len(self.points) != len(self.thresholds):
            raise ValidationError("curve points and thresholds must align")
        if self.points[0] != (0.0, 0.0) or self.points[-1] != (1.0, 1.0):
            raise ValidationError("curve must start at (0,0) and end at (1,1)")
        prev = (-1.0, -1.0)
        for fpr, tpr in self.points:
            if not (0.0 <= fpr <= 1.0 and 0.0 <= tpr <= 1.0):
                raise ValidationError("curve points must lie in the unit square")
            if fpr < prev[0] or tpr < prev[1]:
                raise ValidationError("fpr and tpr must be non-decreasing along the curve")
            prev = (fpr, tpr)


def roc(scores: Sequence[tuple[float, int]]) -> RocCurve:
    """Build the ROC step curve by sweeping the decision rule score >= cutoff
    from strictest to loosest. Tied scores enter as a single simultaneous step.
    """
    values = np.asarray([s for s, _ in scores], dtype=np.float64)
    labels = np.asarray([int(l) for _, l in scores])
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("roc requires both member and non-member labels")
    if not np.all(np.isfinite(values)):
        raise ValidationError("scores contain non-finite values")
    order = np.argsort(-values, kind="stable")
    points = [(0.0, 0.0)]
    thresholds = [math.inf]
    tp = fp = 0
    i = 0
    while i < len(order):
        cutoff = values[order[i]]
        while i < len(order) and values[order[i]] == cutoff:
            if labels[order[i]] == 1:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / n_neg, tp / n_pos))
        thresholds.append(float(cutoff))
    return RocCurve(points=tuple(points), thresholds=tuple(thresholds))


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the step curve; equals the Mann-Whitney
    statistic Pr[member > non-member] + 0.5 Pr[tie]."""
    total = 0.0
    for (f0, t0), (f1, t1) in zip(curve.points, curve.points[1:]):
        total += (f1 - f0) * (t0 + t1) / 2.0
    return total


def asr(decisions: Sequence[tuple[int, int]], allow_unbalanced: bool = False) -> float:
    """Fraction of correct membership bits on a balanced evaluation set."""
    if not decisions:
        raise ValidationError("no decisions to evaluate")
    bits = np.asarray([b for b, _ in decisions])
    labels = np.asarray([l for _, l in decisions])
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos != n_neg and not allow_unbalanced:
        raise ValidationError(
            f"unbalanced evaluation set ({n_pos} members, {n_neg} non-members); "
            "pass allow_unbalanced to override"
        )
    return float(np.mean(bits == labels))


def tpr_at_fpr(curve: RocCurve, fpr_target: float) -> float:
    """Max TPR among curve points with FPR <= target; no interpolation."""
    if not 0.0 <= fpr_target <= 1.0:
        raise ValidationError(f"fpr target must lie in [0, 1], got {fpr_target}")
    best = 0.0
    for fpr, tpr in curve.points:
        if fpr <= fpr_target and tpr > best:
            best = tpr
    return best


@dataclass(frozen=True)
class EvalReport:
    attack_kind: str
    asr: float
    auc: float
    tpr_at_fpr: tuple[tuple[float, float], ...]  # (fpr_target, tpr)
    n_members: int
    n_nonmembers: int
    seed: int
    config_digest: str
    asr_best_threshold: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.asr <= 1.0 and 0.0 <= self.auc <= 1.0):
            raise ValidationError("asr and auc must lie in [0, 1]")

    def to_dict(self) -> dict:
        doc = {
            "attack_kind": self.attack_kind,
            "asr": self.asr,
            "auc": self.auc,
            "tpr_at_fpr": [[t, v] for t, v in self.tpr_at_fpr],
            "n_members": self.n_members,
            "n_nonmembers": self.n_nonmembers,
            "seed": self.seed,
            "config_digest": self.config_digest,
        }
        if self.asr_best_threshold is not None:
            doc["asr_best_threshold"] = self.asr_best_threshold
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def best_threshold_asr(scores: Sequence[tuple[float, int]]) -> float:
    """Optimistic ASR: best accuracy over every cutoff on these scores.

    Test-set-leaking by construction; reported only for comparison.
    """
    values = np.asarray([s for s, _ in scores], dtype=np.float64)
    labels = np.asarray([int(l) for _, l in scores])
    n = len(labels)
    best = 0.0
    distinct = np.unique(values)
    cutoffs = np.concatenate([[distinct[0] - 1.0], (distinct[:-1] + distinct[1:]) / 2.0,
                              [distinct[-1] + 1.0], distinct])
    for c in cutoffs:
        acc = float(np.mean((values >= c).astype(int) == labels))
        if acc > best:
            best = acc
    return best


def report(
    attack_kind: str,
    scores: Sequence[tuple[float, int]],
    decisions: Sequence[tuple[int, int]],
    seed: int,
    config_digest: str,
    fpr_targets: Sequence[float] = DEFAULT_FPR_TARGETS,
    allow_unbalanced: bool = False,
    with_best_threshold_asr: bool = False,
) -> tuple[EvalReport, RocCurve]:
    """Metrics for one attack run. 0.01 is always among the FPR targets."""
    if len(scores) != len(decisions):
        raise ValidationError("scores and decisions must describe the same records")
    curve = roc(scores)
    targets = sorted(set(float(t) for t in fpr_targets) | {0.01})
    labels = [l for _, l in scores]
    rep = EvalReport(
        attack_kind=attack_kind,
        asr=asr(decisions, allow_unbalanced=allow_unbalanced),
        auc=auc(curve),
        tpr_at_fpr=tuple((t, tpr_at_fpr(curve, t)) for t in targets),
        n_members=sum(1 for l in labels if l == 1),
        n_nonmembers=sum(1 for l in labels if l == 0),
        seed=seed,
        config_digest=config_digest,
        asr_best_threshold=best_threshold_asr(scores) if with_best_threshold_asr else None,
    )
    return rep, curve


def roc_to_csv(curve: RocCurve) -> str:
    lines = ["threshold,fpr,tpr"]
    for (fpr, tpr), thr in zip(curve.points, curve.thresholds):
        thr_s = "inf" if math.isinf(thr) else repr(thr)
        lines.append(f"{thr_s},{fpr!r},{tpr!r}")
    return "\n".join(lines) + "\n"
