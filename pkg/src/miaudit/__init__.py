"""miaudit: black-box membership-inference auditing for conditional image generators.

Scores query samples by patch-wise similarity between their embeddings and
the embeddings of images the generator produced for the same prompt, then
infers membership via threshold, likelihood-ratio, or classifier attacks.
A seeded memorization simulator makes the whole pipeline testable at desk
scale without touching a real model.
"""

from .attacks import (
    GaussianPairModel,
    MlpModel,
    ThresholdModel,
    TrainConfig,
    apply_threshold,
    attack_scores,
    fit_gaussian_pair,
    fit_threshold,
    llr,
    mlp_forward,
    mlp_gradients,
    train_mlp,
)
from .baselines import (
    BaselineConfig,
    calibrate_epsilon,
    gan_leaks_score,
    min_distance_score,
    monte_carlo_score,
)
from .errors import (
    AuditError,
    ConfigError,
    DataError,
    DegenerateDataError,
    NumericalError,
    ParseError,
    ShapeError,
    ValidationError,
)
from .evaluation import EvalReport, RocCurve, asr, auc, report, roc, tpr_at_fpr
from .records import (
    DatasetSplit,
    EmbeddingMatrix,
    QueryRecord,
    load_records,
    save_records,
    validate_split,
)
from .similarity import (
    Aggregator,
    Metric,
    SimilarityProfile,
    aggregate,
    patch_scores,
    profile,
    scalar_score,
)
from .simulator import SimConfig, SimWorld, apply_defense, gen_world, sweep

__version__ = "0.1.0"

__all__ = [
    "AuditError",
    "Aggregator",
    "BaselineConfig",
    "ConfigError",
    "DataError",
    "DatasetSplit",
    "DegenerateDataError",
    "EmbeddingMatrix",
    "EvalReport",
    "GaussianPairModel",
    "Metric",
    "MlpModel",
    "NumericalError",
    "ParseError",
    "QueryRecord",
    "RocCurve",
    "ShapeError",
    "SimConfig",
    "SimWorld",
    "SimilarityProfile",
    "ThresholdModel",
    "TrainConfig",
    "ValidationError",
    "aggregate",
    "apply_defense",
    "apply_threshold",
    "asr",
    "attack_scores",
    "auc",
    "calibrate_epsilon",
    "fit_gaussian_pair",
    "fit_threshold",
    "gan_leaks_score",
    "gen_world",
    "llr",
    "load_records",
    "min_distance_score",
    "mlp_forward",
    "mlp_gradients",
    "monte_carlo_score",
    "patch_scores",
    "profile",
    "report",
    "roc",
    "save_records",
    "scalar_score",
    "sweep",
    "tpr_at_fpr",
    "train_mlp",
    "validate_split",
]
