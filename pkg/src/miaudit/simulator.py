"""Synthetic worlds with a controllable memorization gap.

Memorization is modeled as cosine alignment gamma between a record's true
patch embeddings and the embeddings of its generated images: members are
generated with gamma_mem, non-members with gamma_base, optionally attenuated
by a caption-fidelity multiplier (scenarios II/IV) or a privacy-defense
mapping. This gives the full pipeline something honest to chew on at desk
scale: attacks must recover the gap from the embeddings alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .errors import ConfigError
from .records import DatasetSplit, EmbeddingMatrix, QueryRecord, validate_split

SCENARIO_TAGS = ("I", "II", "III", "IV")

# scenarios I/II assume auxiliary-data overlap with the target member set
OVERLAP_SCENARIOS = ("I", "II")
# scenarios II/IV synthesize captions, attenuating conditioning fidelity
CAPTION_SCENARIOS = ("II", "IV")


@dataclass(frozen=True)
class SimConfig:
    k: int = 32
    d: int = 64
    n_members: int = 100
    n_nonmembers: int = 100
    m: int = 3
    gamma_mem: float = 0.9
    gamma_base: float = 0.45
    caption_kappa: float = 0.9
    overlap_fraction: float = 0.5
    noise_sigma: float = 0.05
    defense_epsilon: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.d < 1:
            raise ConfigError(f"embedding geometry must be positive, got k={self.k}, d={self.d}")
        if self.n_members < 1 or self.n_nonmembers < 1:
            raise ConfigError("n_members and n_nonmembers must be >= 1")
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        for name in ("gamma_mem", "gamma_base"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.gamma_base > self.gamma_mem:
            raise ConfigError("gamma_base must not exceed gamma_mem")
        if not 0.0 < self.caption_kappa <= 1.0:
            raise ConfigError(f"caption_kappa must lie in (0, 1], got {self.caption_kappa}")
        if not 0.0 <= self.overlap_fraction <= 1.0:
            raise ConfigError("overlap_fraction must lie in [0, 1]")
        if self.noise_sigma < 0.0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.defense_epsilon is not None and not self.defense_epsilon > 0:
            raise ConfigError("defense_epsilon must be positive when present")


@dataclass
class SimWorld:
    split: DatasetSplit
    ground_truth: dict[str, EmbeddingMatrix]
    effective_gammas: dict[str, float]
    config: SimConfig
    scenario: str


def _unit_rows(a: np.ndarray) -> np.ndarray:
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def _true_matrix(rng: np.random.Generator, k: int, d: int) -> np.ndarray:
    return _unit_rows(rng.standard_normal((k, d)))


def _generated_matrix(
    rng: np.random.Generator, q: np.ndarray, gamma: float, noise_sigma: float
) -> np.ndarray:
    k, d = q.shape
    r = _unit_rows(rng.standard_normal((k, d)))
    mix = gamma * q + math.sqrt(max(0.0, 1.0 - gamma * gamma)) * r
    g = _unit_rows(mix)
    if noise_sigma > 0.0:
        g = _unit_rows(g + rng.normal(0.0, noise_sigma, size=(k, d)))
    return g


def _make_record(
    rng: np.random.Generator,
    rec_id: str,
    q: np.ndarray,
    gamma: float,
    cfg: SimConfig,
    label: int,
    text_available: bool,
    scenario: str,
) -> QueryRecord:
    gens = tuple(
        EmbeddingMatrix(
            _generated_matrix(rng, q, gamma, cfg.noise_sigma).astype(np.float32)
        )
        for _ in range(cfg.m)
    )
    return QueryRecord(
        id=rec_id,
        query_embedding=EmbeddingMatrix(q.astype(np.float32)),
        generated_embeddings=gens,
        label=label,
        text_available=text_available,
        scenario=scenario,
    )


def gen_world(cfg: SimConfig, scenario: str = "I") -> SimWorld:
    """Deterministically synthesize a DatasetSplit for one attack scenario.

    Per record: a true matrix Q with unit-normalized Gaussian rows, and m
    generated matrices whose rows align with Q at strength gamma_eff
    (caption-attenuated for scenarios II/IV), plus per-coordinate noise.
    Scenarios I/II copy overlap_fraction of the target members into the
    shadow member set (same Q, freshly sampled generations).
    """
    if scenario not in SCENARIO_TAGS:
        raise ConfigError(f"scenario must be one of {SCENARIO_TAGS}, got {scenario!r}")
    rng = np.random.default_rng(cfg.seed)
    kappa = cfg.caption_kappa if scenario in CAPTION_SCENARIOS else 1.0
    text_available = scenario not in CAPTION_SCENARIOS
    gamma_member = min(1.0, kappa * cfg.gamma_mem)
    gamma_nonmember = min(1.0, kappa * cfg.gamma_base)
    overlap = cfg.overlap_fraction if scenario in OVERLAP_SCENARIOS else 0.0
    n_overlap = int(math.floor(overlap * cfg.n_members))

    ground_truth: dict[str, EmbeddingMatrix] = {}
    effective_gammas: dict[str, float] = {}
    split = DatasetSplit()

    def build(prefix: str, n: int, gamma: float, label: int, out: list[QueryRecord],
              reuse: list[QueryRecord] | None = None, n_reuse: int = 0) -> None:
        for i in range(n):
            if reuse is not None and i < n_reuse:
                source = reuse[i]
                rec_id = source.id
                q = source.query_embedding.values.astype(np.float64)
            else:
                rec_id = f"{prefix}-{i:05d}"
                q = _true_matrix(rng, cfg.k, cfg.d)
            rec = _make_record(rng, rec_id, q, gamma, cfg, label, text_available, scenario)
            # overlapped shadow records share the target id and its true matrix,
            # so keying by id stays consistent across splits
            ground_truth[rec_id] = rec.query_embedding
            effective_gammas[rec_id] = gamma
            out.append(rec)

    build("target-member", cfg.n_members, gamma_member, 1, split.target_members)
    build("target-nonmember", cfg.n_nonmembers, gamma_nonmember, 0, split.target_nonmembers)
    build(
        "shadow-member", cfg.n_members, gamma_member, 1, split.shadow_members,
        reuse=split.target_members, n_reuse=n_overlap,
    )
    build("shadow-nonmember", cfg.n_nonmembers, gamma_nonmember, 0, split.shadow_nonmembers)

    validate_split(split, balanced=cfg.n_members == cfg.n_nonmembers)
    return SimWorld(
        split=split,
        ground_truth=ground_truth,
        effective_gammas=effective_gammas,
        config=cfg,
        scenario=scenario,
    )


# Anchor points of the invented privacy-budget mapping: fraction of the
# memorization gap that survives training at budget eps. Monotone by
# construction; NOT a differential-privacy guarantee of any kind.
_DEFENSE_ANCHORS = ((1.0, 0.05), (4.0, 0.10), (10.0, 0.15))


def defense_gap_retention(epsilon: float) -> float:
    """Log-linear interpolation through the anchor points, log-linear
    extrapolation outside them, clamped to [0, 1]."""
    if epsilon <= 0:
        raise ConfigError("defense epsilon must be positive")
    log_e = math.log(epsilon)
    pts = [(math.log(e), g) for e, g in _DEFENSE_ANCHORS]
    if log_e <= pts[0][0]:
        (x0, y0), (x1, y1) = pts[0], pts[1]
    elif log_e >= pts[-1][0]:
        (x0, y0), (x1, y1) = pts[-2], pts[-1]
    else:
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x0 <= log_e <= x1:
                break
    g = y0 + (y1 - y0) * (log_e - x0) / (x1 - x0)
    return min(1.0, max(0.0, g))


def apply_defense(cfg: SimConfig) -> SimConfig:
    """Shrink the memorization gap according to the privacy budget:
    gamma_mem -> gamma_base + (gamma_mem - gamma_base) * g(epsilon)."""
    if cfg.defense_epsilon is None:
        raise ConfigError("apply_defense requires defense_epsilon to be set")
    g = defense_gap_retention(cfg.defense_epsilon)
    new_gamma = cfg.gamma_base + (cfg.gamma_mem - cfg.gamma_base) * g
    return replace(cfg, gamma_mem=new_gamma)


SWEEPABLE = ("gamma_mem", "m", "n_members")


def sweep(
    cfg: SimConfig, parameter: str, values: Iterable, scenario: str = "I"
) -> list[tuple[object, SimWorld]]:
    """One world per parameter value, seeded as cfg.seed + index."""
    if parameter not in SWEEPABLE:
        raise ConfigError(f"parameter must be one of {SWEEPABLE}, got {parameter!r}")
    out = []
    for i, value in enumerate(values):
        swept = replace(cfg, **{parameter: value, "seed": cfg.seed + i})
        out.append((value, gen_world(swept, scenario)))
    return out
