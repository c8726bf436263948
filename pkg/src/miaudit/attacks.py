"""The three calibrated membership attacks.

Each attack is fitted on labeled shadow profiles and then applied to target
profiles, producing a unified "higher = member evidence" score per record plus
a hard membership bit:

* threshold   - Min-Max scaled scalar score against a Youden-optimal cutoff
* distribution - per-patch Gaussian pair (member vs non-member), log-likelihood ratio
* classifier  - small MLP trained from scratch with SGD + momentum on BCE
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateDataError, ShapeError, ValidationError
from .similarity import SimilarityProfile, scalar_score

ATTACK_KINDS = ("threshold", "distribution", "classifier")

VARIANCE_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# Threshold attack
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdModel:
    tau: float
    s_min: float
    s_max: float
    orientation: str = "higher_is_member"

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ValidationError("threshold model requires s_min < s_max")
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError(f"tau must lie in [0, 1], got {self.tau}")

    def scale(self, score: float) -> float:
        scaled = (score - self.s_min) / (self.s_max - self.s_min)
        return min(1.0, max(0.0, scaled))


def fit_threshold(
    member_scores: Sequence[float], nonmember_scores: Sequence[float]
) -> ThresholdModel:
    """Min-Max scale the union of shadow scores, then pick the cutoff
    maximizing Youden's J = TPR - FPR over {0, 1, midpoints of consecutive
    distinct scaled scores}. Ties break toward the smallest cutoff.
    """
    members = np.asarray(member_scores, dtype=np.float64)
    nonmembers = np.asarray(nonmember_scores, dtype=np.float64)
    if members.size == 0 or nonmembers.size == 0:
        raise ValidationError("both member and non-member scores are required")
    union = np.concatenate([members, nonmembers])
    if not np.all(np.isfinite(union)):
        raise ValidationError("calibration scores contain non-finite values")
    s_min, s_max = float(union.min()), float(union.max())
    if s_min == s_max:
        raise DegenerateDataError("all calibration scores are identical; cannot scale")
    scaled_m = (members - s_min) / (s_max - s_min)
    scaled_n = (nonmembers - s_min) / (s_max - s_min)
    distinct = np.unique(np.concatenate([scaled_m, scaled_n]))
    midpoints = (distinct[:-1] + distinct[1:]) / 2.0
    candidates = np.unique(np.concatenate([[0.0, 1.0], midpoints]))
    best_tau, best_j = 0.0, -np.inf
    for tau in candidates:
        tpr = float(np.mean(scaled_m >= tau))
        fpr = float(np.mean(scaled_n >= tau))
        j = tpr - fpr
        if j > best_j:
            best_tau, best_j = float(tau), j
    return ThresholdModel(tau=best_tau, s_min=s_min, s_max=s_max)


def apply_threshold(model: ThresholdModel, score: float) -> int:
    """1 iff the scaled (and clamped) score reaches the cutoff."""
    return 1 if model.scale(score) >= model.tau else 0


# ---------------------------------------------------------------------------
# Distribution attack
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianPairModel:
    mu_in: np.ndarray
    sigma_in: np.ndarray
    mu_out: np.ndarray
    sigma_out: np.ndarray
    variance_floor: float = VARIANCE_FLOOR

    def __post_init__(self):
        for name in ("mu_in", "sigma_in", "mu_out", "sigma_out"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite values")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.variance_floor <= 0:
            raise ValidationError("variance_floor must be positive")
        if np.any(self.sigma_in < self.variance_floor) or np.any(
            self.sigma_out < self.variance_floor
        ):
            raise ValidationError("sigma values below the variance floor")

    @property
    def k(self) -> int:
        return self.mu_in.shape[0]


def fit_gaussian_pair(
    shadow_profiles: Iterable[SimilarityProfile],
    variance_floor: float = VARIANCE_FLOOR,
) -> GaussianPairModel:
    """Per-patch sample mean and std (n-1 denominator) for each class."""
    members, nonmembers = _split_by_label(shadow_profiles)
    if len(members) < 2 or len(nonmembers) < 2:
        raise ValidationError(
            f"need at least 2 profiles per class, got {len(members)} members "
            f"and {len(nonmembers)} non-members"
        )
    in_stack = np.stack([p.scores for p in members])
    out_stack = np.stack([p.scores for p in nonmembers])
    return GaussianPairModel(
        mu_in=in_stack.mean(axis=0),
        sigma_in=np.maximum(in_stack.std(axis=0, ddof=1), variance_floor),
        mu_out=out_stack.mean(axis=0),
        sigma_out=np.maximum(out_stack.std(axis=0, ddof=1), variance_floor),
        variance_floor=variance_floor,
    )


def llr(model: GaussianPairModel, p: SimilarityProfile) -> float:
    """Sum over patches of log N(s; mu_in, sigma_in) - log N(s; mu_out, sigma_out)."""
    if p.k != model.k:
        raise ShapeError(f"profile has k={p.k}, model expects k={model.k}")
    s = p.scores
    log_in = _log_normal_pdf(s, model.mu_in, model.sigma_in)
    log_out = _log_normal_pdf(s, model.mu_out, model.sigma_out)
    return float(np.sum(log_in - log_out))


def _log_normal_pdf(x: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    return -0.5 * math.log(2.0 * math.pi) - np.log(sigma) - 0.5 * ((x - mu) / sigma) ** 2


# ---------------------------------------------------------------------------
# Classifier attack
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 16
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValidationError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")


@dataclass
class MlpModel:
    """Rectifier-hidden, logistic-output perceptron: k -> 64 -> 32 -> 1."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int
    loss_history: list[float] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError("parameter count does not match layer_sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ShapeError(f"layer {i} parameter shapes do not chain")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {i} parameters contain non-finite values")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def k(self) -> int:
        return self.layer_sizes[0]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_batch(model: MlpModel, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Returns (pre-activations per layer, activations incl. input)."""
    acts = [x]
    zs = []
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ w + b
        zs.append(z)
        acts.append(_sigmoid(z) if i == last else np.maximum(z, 0.0))
    return zs, acts


def mlp_forward(model: MlpModel, p: SimilarityProfile | np.ndarray) -> float:
    """Logistic membership probability for one profile."""
    x = p.scores if isinstance(p, SimilarityProfile) else np.asarray(p, dtype=np.float64)
    if x.shape != (model.k,):
        raise ShapeError(f"profile has shape {x.shape}, model expects ({model.k},)")
    _, acts = _forward_batch(model, x[None, :])
    return float(acts[-1][0, 0])


def mlp_loss(model: MlpModel, profiles: Sequence[SimilarityProfile]) -> float:
    """Mean binary cross-entropy, computed in the numerically stable logit form."""
    x, y = _profiles_to_xy(model.k, profiles)
    zs, _ = _forward_batch(model, x)
    z = zs[-1][:, 0]
    # softplus(z) - y*z == BCE(sigmoid(z), y)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


@dataclass(frozen=True)
class MlpGradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def mlp_gradients(model: MlpModel, batch: Sequence[SimilarityProfile]) -> MlpGradients:
    """Exact backpropagation gradients of the mean BCE over the batch."""
    if not batch:
        raise ValidationError("gradient batch must be non-empty")
    x, y = _profiles_to_xy(model.k, batch)
    g_w, g_b = _gradients_xy(model, x, y)
    return MlpGradients(weights=g_w, biases=g_b)


def _profiles_to_xy(k: int, profiles: Sequence[SimilarityProfile]) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for p in profiles:
        if p.k != k:
            raise ShapeError(f"profile {p.record_id!r} has k={p.k}, expected {k}")
        if p.label is None:
            raise ValidationError(f"profile {p.record_id!r} has no membership label")
        xs.append(p.scores)
        ys.append(float(p.label))
    return np.stack(xs), np.asarray(ys)


def init_mlp(k: int, seed: int, hidden: tuple[int, ...] = (64, 32)) -> MlpModel:
    """Uniform init in +-sqrt(6/(fan_in+fan_out)) per layer, seeded."""
    sizes = (k, *hidden, 1)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpModel(layer_sizes=sizes, weights=weights, biases=biases, seed=seed)


def train_mlp(
    shadow_profiles: Sequence[SimilarityProfile], cfg: TrainConfig = TrainConfig()
) -> MlpModel:
    """Mini-batch SGD with momentum on BCE; deterministic given data order and seed."""
    members, nonmembers = _split_by_label(shadow_profiles)
    if not members or not nonmembers:
        raise ValidationError("training data must contain both classes")
    profiles = list(shadow_profiles)
    k = profiles[0].k
    model = init_mlp(k, cfg.seed)
    x, y = _profiles_to_xy(k, profiles)
    rng = np.random.default_rng(cfg.seed + 1)
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    model.loss_history.append(mlp_loss(model, profiles))
    for _ in range(cfg.epochs):
        order = rng.permutation(len(profiles))
        for start in range(0, len(profiles), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = _gradients_xy(model, x[idx], y[idx])
            for i in range(len(model.weights)):
                vel_w[i] = cfg.momentum * vel_w[i] + grads[0][i]
                vel_b[i] = cfg.momentum * vel_b[i] + grads[1][i]
                model.weights[i] = model.weights[i] - cfg.learning_rate * vel_w[i]
                model.biases[i] = model.biases[i] - cfg.learning_rate * vel_b[i]
        model.loss_history.append(mlp_loss(model, profiles))
    return model


def _gradients_xy(
    model: MlpModel, x: np.ndarray, y: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    zs, acts = _forward_batch(model, x)
    n_layers = len(model.weights)
    delta = (acts[-1] - y[:, None]) / x.shape[0]
    g_w = [np.empty(0)] * n_layers
    g_b = [np.empty(0)] * n_layers
    for i in range(n_layers - 1, -1, -1):
        g_w[i] = acts[i].T @ delta
        g_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (zs[i - 1] > 0.0)
    return g_w, g_b


def _split_by_label(
    profiles: Iterable[SimilarityProfile],
) -> tuple[list[SimilarityProfile], list[SimilarityProfile]]:
    members, nonmembers = [], []
    for p in profiles:
        if p.label == 1:
            members.append(p)
        elif p.label == 0:
            nonmembers.append(p)
        else:
            raise ValidationError(f"profile {p.record_id!r} has no membership label")
    return members, nonmembers


# ---------------------------------------------------------------------------
# Unified scoring
# ---------------------------------------------------------------------------

AttackModel = ThresholdModel | GaussianPairModel | MlpModel


def attack_scores(
    kind: str,
    model: AttackModel,
    target_profiles: Sequence[SimilarityProfile],
) -> list[tuple[str, float, int]]:
    """(record id, higher-is-member score, membership bit) per target profile.

    Bits: threshold uses scaled score >= tau; distribution and classifier
    break ties toward non-member (llr > 0, probability > 0.5).
    """
    if kind not in ATTACK_KINDS:
        raise ValidationError(f"unknown attack kind {kind!r}; expected one of {ATTACK_KINDS}")
    out = []
    for p in target_profiles:
        if kind == "threshold":
            if not isinstance(model, ThresholdModel):
                raise ValidationError("threshold attack requires a ThresholdModel")
            score = model.scale(scalar_score(p))
            bit = 1 if score >= model.tau else 0
        elif kind == "distribution":
            if not isinstance(model, GaussianPairModel):
                raise ValidationError("distribution attack requires a GaussianPairModel")
            score = llr(model, p)
            bit = 1 if score > 0.0 else 0
        else:
            if not isinstance(model, MlpModel):
                raise ValidationError("classifier attack requires an MlpModel")
            score = mlp_forward(model, p)
            bit = 1 if score > 0.5 else 0
        out.append((p.record_id, float(score), bit))
    return out


# ---------------------------------------------------------------------------
# Model serialization
# ---------------------------------------------------------------------------

def model_to_dict(kind: str, model: AttackModel) -> dict:
    doc: dict = {"kind": kind}
    if isinstance(model, ThresholdModel):
        doc.update(tau=model.tau, s_min=model.s_min, s_max=model.s_max)
    elif isinstance(model, GaussianPairModel):
        doc.update(
            mu_in=model.mu_in.tolist(),
            sigma_in=model.sigma_in.tolist(),
            mu_out=model.mu_out.tolist(),
            sigma_out=model.sigma_out.tolist(),
        )
    elif isinstance(model, MlpModel):
        doc.update(
            layer_sizes=list(model.layer_sizes),
            weights=[w.tolist() for w in model.weights],
            biases=[b.tolist() for b in model.biases],
            seed=model.seed,
        )
    else:
        raise ValidationError(f"cannot serialize model of type {type(model).__name__}")
    return doc


def model_from_dict(doc: dict) -> tuple[str, AttackModel]:
    kind = doc.get("kind")
    if kind == "threshold":
        return kind, ThresholdModel(tau=doc["tau"], s_min=doc["s_min"], s_max=doc["s_max"])
    if kind == "distribution":
        return kind, GaussianPairModel(
            mu_in=np.asarray(doc["mu_in"], dtype=np.float64),
            sigma_in=np.asarray(doc["sigma_in"], dtype=np.float64),
            mu_out=np.asarray(doc["mu_out"], dtype=np.float64),
            sigma_out=np.asarray(doc["sigma_out"], dtype=np.float64),
        )
    if kind == "classifier":
        return kind, MlpModel(
            layer_sizes=tuple(doc["layer_sizes"]),
            weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
            seed=int(doc["seed"]),
        )
    raise ValidationError(f"unknown model kind {kind!r}")


def save_model(kind: str, model: AttackModel, path: str, config_digest: str | None = None) -> None:
    doc = model_to_dict(kind, model)
    if config_digest is not None:
        doc["config_digest"] = config_digest
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> tuple[str, AttackModel, str | None]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    kind, model = model_from_dict(doc)
    return kind, model, doc.get("config_digest")
