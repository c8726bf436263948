"""End-to-end orchestration shared by the CLI subcommands.

Each stage reads the previous stage's files and is individually rerunnable;
the single-shot pipeline simply runs the stages in order, so stage-wise and
single-shot runs produce byte-identical artifacts. Every artifact embeds the
digest of the resolved run configuration, and evaluation refuses to mix
artifacts from different configurations.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import baselines as bl
from . import simulator as sim
from .attacks import (
    ATTACK_KINDS,
    ThresholdModel,
    TrainConfig,
    apply_threshold,
    attack_scores,
    fit_gaussian_pair,
    fit_threshold,
    model_from_dict,
    model_to_dict,
    train_mlp,
)
from .errors import ConfigError, DegenerateDataError, ShapeError, ValidationError
from .evaluation import DEFAULT_FPR_TARGETS, EvalReport, report, roc_to_csv
from .records import DatasetSplit, QueryRecord, load_records, save_records, validate_split
from .similarity import Aggregator, Metric, SimilarityProfile, profile, scalar_score

log = logging.getLogger("miaudit")

ALL_ATTACKS = ATTACK_KINDS + bl.BASELINE_KINDS

SPLIT_PARTS = ("shadow_members", "shadow_nonmembers", "target_members", "target_nonmembers")

# stable per-attack offsets for deriving baseline sampling seeds
_BASELINE_SEED_TAG = {"monte_carlo": 101, "gan_leaks": 102, "min_distance": 103}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    data_dir: str
    out_dir: str
    metric: Metric = Metric.COSINE
    aggregator: Aggregator = Aggregator.MEAN
    attacks: tuple[str, ...] = ("threshold", "distribution", "classifier")
    scenario: str = "I"
    m: int | None = None
    format: str = "jsonl"
    balanced: bool = True
    allow_unbalanced: bool = False
    best_threshold_asr: bool = False
    fpr_targets: tuple[float, ...] = DEFAULT_FPR_TARGETS
    train: TrainConfig = field(default_factory=TrainConfig)
    baseline_sample_budget: int = 3
    baseline_epsilon: float | None = None
    baseline_metric: Metric = Metric.L2
    simulator: sim.SimConfig | None = None

    def __post_init__(self):
        if not self.attacks:
            raise ConfigError("at least one attack must be selected")
        for a in self.attacks:
            if a not in ALL_ATTACKS:
                raise ConfigError(f"unknown attack {a!r}; expected one of {ALL_ATTACKS}")
        if os.path.abspath(self.data_dir) == os.path.abspath(self.out_dir):
            raise ConfigError("data_dir and out_dir must be distinct paths")
        if self.format not in ("jsonl", "binary"):
            raise ConfigError(f"format must be 'jsonl' or 'binary', got {self.format!r}")
        if self.m is not None and self.m < 1:
            raise ConfigError("m must be >= 1 when given")

    def to_dict(self) -> dict:
        doc = {
            "seed": self.seed,
            "data_dir": self.data_dir,
            "out_dir": self.out_dir,
            "metric": self.metric.value,
            "aggregator": self.aggregator.value,
            "attacks": list(self.attacks),
            "scenario": self.scenario,
            "m": self.m,
            "format": self.format,
            "balanced": self.balanced,
            "allow_unbalanced": self.allow_unbalanced,
            "best_threshold_asr": self.best_threshold_asr,
            "fpr_targets": list(self.fpr_targets),
            "train": dataclasses.asdict(self.train),
            "baseline": {
                "sample_budget": self.baseline_sample_budget,
                "epsilon": self.baseline_epsilon,
                "metric": self.baseline_metric.value,
            },
        }
        if self.simulator is not None:
            doc["simulator"] = dataclasses.asdict(self.simulator)
        return doc

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def config_from_dict(doc: dict, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from a JSON document, applying CLI flag overrides."""
    doc = dict(doc)
    if overrides:
        doc.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in doc or doc["seed"] is None:
        raise ConfigError("config is missing required field 'seed'")
    for req in ("data_dir", "out_dir"):
        if req not in doc or not doc[req]:
            raise ConfigError(f"config is missing required field {req!r}")
    try:
        seed = int(doc["seed"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed must be an integer, got {doc['seed']!r}") from exc
    attacks = doc.get("attacks", ["threshold", "distribution", "classifier"])
    if isinstance(attacks, str):
        attacks = [a.strip() for a in attacks.split(",") if a.strip()]
    train_doc = dict(doc.get("train") or {})
    train_doc.setdefault("seed", seed)
    baseline_doc = dict(doc.get("baseline") or {})
    sim_cfg = None
    if doc.get("simulator") is not None:
        sim_doc = dict(doc["simulator"])
        sim_doc.setdefault("seed", seed)
        try:
            sim_cfg = sim.SimConfig(**sim_doc)
        except TypeError as exc:
            raise ConfigError(f"invalid simulator block: {exc}") from exc
    try:
        return RunConfig(
            seed=seed,
            data_dir=str(doc["data_dir"]),
            out_dir=str(doc["out_dir"]),
            metric=Metric(doc.get("metric", "cosine")),
            aggregator=Aggregator(doc.get("aggregator", "mean")),
            attacks=tuple(attacks),
            scenario=str(doc.get("scenario", "I")),
            m=doc.get("m"),
            format=str(doc.get("format", "jsonl")),
            balanced=bool(doc.get("balanced", True)),
            allow_unbalanced=bool(doc.get("allow_unbalanced", False)),
            best_threshold_asr=bool(doc.get("best_threshold_asr", False)),
            fpr_targets=tuple(doc.get("fpr_targets", DEFAULT_FPR_TARGETS)),
            train=TrainConfig(**train_doc),
            baseline_sample_budget=int(baseline_doc.get("sample_budget", 3)),
            baseline_epsilon=baseline_doc.get("epsilon"),
            baseline_metric=Metric(baseline_doc.get("metric", "l2")),
            simulator=sim_cfg,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config file must contain a JSON object")
    return config_from_dict(doc, overrides)


# ---------------------------------------------------------------------------
# File layout helpers
# ---------------------------------------------------------------------------

def data_path(cfg: RunConfig, part: str) -> str:
    ext = "jsonl" if cfg.format == "jsonl" else "bin"
    return os.path.join(cfg.data_dir, f"{part}.{ext}")


def profiles_path(cfg: RunConfig, side: str) -> str:
    return os.path.join(cfg.out_dir, f"profiles_{side}.jsonl")


def model_path(cfg: RunConfig, attack: str) -> str:
    return os.path.join(cfg.out_dir, f"model_{attack}.json")


def scores_path(cfg: RunConfig, attack: str) -> str:
    return os.path.join(cfg.out_dir, f"scores_{attack}.jsonl")


def report_path(cfg: RunConfig, attack: str) -> str:
    return os.path.join(cfg.out_dir, f"report_{attack}.json")


def roc_path(cfg: RunConfig, attack: str) -> str:
    return os.path.join(cfg.out_dir, f"roc_{attack}.csv")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> dict:
    """Generate a synthetic world and write it in the embedding-store formats."""
    if cfg.simulator is None:
        raise ConfigError("simulate requires a 'simulator' block in the config")
    sim_cfg = cfg.simulator
    if sim_cfg.defense_epsilon is not None:
        sim_cfg = sim.apply_defense(sim_cfg)
    world = sim.gen_world(sim_cfg, cfg.scenario)
    os.makedirs(cfg.data_dir, exist_ok=True)
    files = {}
    split = world.split
    for part in SPLIT_PARTS:
        path = data_path(cfg, part)
        save_records(getattr(split, part), path, cfg.format)
        files[part] = os.path.basename(path)
    manifest = {
        "kind": "manifest",
        "config_digest": cfg.digest(),
        "seed": cfg.seed,
        "scenario": cfg.scenario,
        "format": cfg.format,
        "k": sim_cfg.k,
        "d": sim_cfg.d,
        "m": sim_cfg.m,
        "gamma_mem": sim_cfg.gamma_mem,
        "gamma_base": sim_cfg.gamma_base,
        "files": files,
        "counts": {part: len(getattr(split, part)) for part in SPLIT_PARTS},
    }
    manifest_file = os.path.join(cfg.data_dir, "manifest.json")
    with open(manifest_file, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    log.info("simulated world written to %s", cfg.data_dir)
    return manifest


# ---------------------------------------------------------------------------
# score: embeddings -> similarity profiles
# ---------------------------------------------------------------------------

def load_split(cfg: RunConfig) -> DatasetSplit:
    parts = {}
    for part in SPLIT_PARTS:
        path = data_path(cfg, part)
        if not os.path.exists(path):
            raise ValidationError(f"missing input file: {path}")
        parts[part] = load_records(path, cfg.format)
    split = DatasetSplit(**parts)
    validate_split(split, balanced=cfg.balanced and not cfg.allow_unbalanced)
    shapes = {
        (rec.k, rec.d)
        for records in parts.values()
        for rec in records
    }
    if len(shapes) > 1:
        raise ShapeError(f"inconsistent (k, d) across input files: {sorted(shapes)}")
    for part in ("shadow_members", "shadow_nonmembers"):
        for rec in parts[part]:
            if rec.label is None:
                raise ValidationError(f"shadow record {rec.id!r} is missing its label")
    if cfg.m is not None:
        for records in parts.values():
            for rec in records:
                if rec.m != cfg.m:
                    raise ValidationError(
                        f"record {rec.id!r} has m={rec.m}, config expects m={cfg.m}"
                    )
    return split


def _profile_records(records: list[QueryRecord], cfg: RunConfig, label: int | None = None):
    out = []
    for rec in records:
        p = profile(rec, cfg.metric, cfg.aggregator)
        if label is not None and p.label is None:
            p = dataclasses.replace(p, label=label)
        out.append(p)
    return out


def _write_profiles(path: str, cfg: RunConfig, side: str, profs: list[SimilarityProfile]) -> None:
    orientation = "higher_is_similar" if cfg.metric.higher_is_similar else "lower_is_similar"
    header = {
        "kind": "profiles",
        "split": side,
        "config_digest": cfg.digest(),
        "metric": cfg.metric.value,
        "aggregator": cfg.aggregator.value,
        "orientation": orientation,
        "k": profs[0].k,
        "m": profs[0].m,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for p in profs:
            row = {
                "id": p.record_id,
                "label": p.label,
                "scores": [float(s) for s in p.scores],
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_profiles(path: str) -> tuple[dict, list[SimilarityProfile]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValidationError(f"empty profiles file: {path}")
    header = json.loads(lines[0])
    if header.get("kind") != "profiles":
        raise ValidationError(f"{path} is not a profiles file")
    metric = Metric(header["metric"])
    aggregator = Aggregator(header["aggregator"])
    m = int(header["m"])
    profs = []
    for line in lines[1:]:
        row = json.loads(line)
        profs.append(
            SimilarityProfile(
                record_id=row["id"],
                scores=np.asarray(row["scores"], dtype=np.float64),
                metric=metric,
                aggregator=aggregator,
                m=m,
                label=row["label"],
            )
        )
    return header, profs


def cmd_score(cfg: RunConfig) -> tuple[str, str]:
    """Compute similarity profiles for the shadow and target splits."""
    split = load_split(cfg)
    shadow = _profile_records(split.shadow_members + split.shadow_nonmembers, cfg)
    target = _profile_records(split.target_members + split.target_nonmembers, cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    shadow_path = profiles_path(cfg, "shadow")
    target_path = profiles_path(cfg, "target")
    _write_profiles(shadow_path, cfg, "shadow", shadow)
    _write_profiles(target_path, cfg, "target", target)
    log.info("profiles written to %s and %s", shadow_path, target_path)
    return shadow_path, target_path


# ---------------------------------------------------------------------------
# calibrate: shadow profiles -> fitted models
# ---------------------------------------------------------------------------

def _baseline_pool(records: list[QueryRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Pooled vectors of every generated embedding plus owner indices."""
    vecs, owners = [], []
    for i, rec in enumerate(records):
        for g in rec.generated_embeddings:
            vecs.append(bl.pooled(g))
            owners.append(i)
    return np.stack(vecs), np.asarray(owners)


def _blind_baseline_scores(
    attack: str,
    records: list[QueryRecord],
    cfg: RunConfig,
    baseline_cfg: bl.BaselineConfig,
    seed_tag: int,
) -> list[float]:
    """Score records against a blind pool of generated embeddings.

    Mirrors the black-box setting the classic attacks were designed for: the
    attacker draws a limited number of samples from the generator without
    conditioning on the query, so the draw excludes the record's own
    conditional generations.
    """
    pool, owners = _baseline_pool(records)
    rng = np.random.default_rng([cfg.seed, _BASELINE_SEED_TAG[attack], seed_tag])
    scores = []
    for i, rec in enumerate(records):
        candidates = np.flatnonzero(owners != i)
        if candidates.size == 0:
            raise ValidationError("baseline sampling needs generations from other records")
        budget = min(baseline_cfg.sample_budget, candidates.size)
        chosen = rng.choice(candidates, size=budget, replace=False)
        pq = bl.pooled(rec.query_embedding)
        dists = np.array(
            [bl.pooled_distance(pq, pool[j], baseline_cfg.metric) for j in chosen]
        )
        if attack == "monte_carlo":
            scores.append(float(np.mean(dists <= baseline_cfg.epsilon)))
        elif attack == "gan_leaks":
            scores.append(float(np.mean(np.exp(-dists))))
        else:
            scores.append(float(-dists.min()))
    return scores


def _fit_baseline(attack: str, cfg: RunConfig, split: DatasetSplit) -> dict:
    epsilon = cfg.baseline_epsilon
    if epsilon is None:
        epsilon = bl.calibrate_epsilon(
            [rec.query_embedding for rec in split.shadow_nonmembers], cfg.baseline_metric
        )
    baseline_cfg = bl.BaselineConfig(
        epsilon=epsilon, sample_budget=cfg.baseline_sample_budget, metric=cfg.baseline_metric
    )
    shadow_records = split.shadow_members + split.shadow_nonmembers
    shadow_scores = _blind_baseline_scores(attack, shadow_records, cfg, baseline_cfg, seed_tag=1)
    member_scores = [s for s, rec in zip(shadow_scores, shadow_records) if rec.label == 1]
    nonmember_scores = [s for s, rec in zip(shadow_scores, shadow_records) if rec.label == 0]
    doc = {
        "kind": attack,
        "epsilon": epsilon,
        "sample_budget": baseline_cfg.sample_budget,
        "metric": baseline_cfg.metric.value,
    }
    try:
        cutoff = fit_threshold(member_scores, nonmember_scores)
        doc.update(tau=cutoff.tau, s_min=cutoff.s_min, s_max=cutoff.s_max)
    except DegenerateDataError:
        # all shadow scores identical (fully uninformative baseline): decide 0
        doc.update(tau=None, s_min=None, s_max=None)
    return doc


def cmd_calibrate(cfg: RunConfig) -> dict[str, str]:
    """Fit every selected attack on the shadow profiles; write model files."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    digest = cfg.digest()
    paths: dict[str, str] = {}
    shadow_profs = None
    if any(a in ATTACK_KINDS for a in cfg.attacks):
        header, shadow_profs = read_profiles(profiles_path(cfg, "shadow"))
        _check_digest(header.get("config_digest"), digest, profiles_path(cfg, "shadow"))
    split = None
    if any(a in bl.BASELINE_KINDS for a in cfg.attacks):
        split = load_split(cfg)
    for attack in cfg.attacks:
        path = model_path(cfg, attack)
        if attack == "threshold":
            members = [scalar_score(p) for p in shadow_profs if p.label == 1]
            nonmembers = [scalar_score(p) for p in shadow_profs if p.label == 0]
            model = fit_threshold(members, nonmembers)
            doc = model_to_dict("threshold", model)
        elif attack == "distribution":
            doc = model_to_dict("distribution", fit_gaussian_pair(shadow_profs))
        elif attack == "classifier":
            doc = model_to_dict("classifier", train_mlp(shadow_profs, cfg.train))
        else:
            doc = _fit_baseline(attack, cfg, split)
        doc["config_digest"] = digest
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True)
            fh.write("\n")
        paths[attack] = path
        log.info("calibrated %s -> %s", attack, path)
    return paths


def _check_digest(found: str | None, expected: str, path: str) -> None:
    if found != expected:
        raise ValidationError(
            f"config digest mismatch for {path}: file has {found!r}, run expects {expected!r}"
        )


# ---------------------------------------------------------------------------
# attack: fitted models + target data -> per-record scores
# ---------------------------------------------------------------------------

def cmd_attack(cfg: RunConfig) -> dict[str, str]:
    """Score the target split with each selected fitted attack."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    digest = cfg.digest()
    paths: dict[str, str] = {}
    target_profs = None
    labels_by_id: dict[str, int | None] = {}
    if any(a in ATTACK_KINDS for a in cfg.attacks):
        header, target_profs = read_profiles(profiles_path(cfg, "target"))
        _check_digest(header.get("config_digest"), digest, profiles_path(cfg, "target"))
        labels_by_id = {p.record_id: p.label for p in target_profs}
    split = None
    if any(a in bl.BASELINE_KINDS for a in cfg.attacks):
        split = load_split(cfg)
    for attack in cfg.attacks:
        mpath = model_path(cfg, attack)
        if not os.path.exists(mpath):
            raise ValidationError(f"missing model file {mpath}; run calibrate first")
        with open(mpath, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        _check_digest(doc.get("config_digest"), digest, mpath)
        if attack in ATTACK_KINDS:
            _, model = model_from_dict(doc)
            rows = [
                {"id": rid, "score": score, "bit": bit, "label": labels_by_id.get(rid)}
                for rid, score, bit in attack_scores(attack, model, target_profs)
            ]
        else:
            rows = _attack_baseline(attack, doc, cfg, split)
        path = scores_path(cfg, attack)
        header_row = {
            "kind": "scores",
            "attack": attack,
            "config_digest": digest,
            "seed": cfg.seed,
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header_row, sort_keys=True) + "\n")
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        paths[attack] = path
        log.info("attacked with %s -> %s", attack, path)
    return paths


def _attack_baseline(attack: str, doc: dict, cfg: RunConfig, split: DatasetSplit) -> list[dict]:
    baseline_cfg = bl.BaselineConfig(
        epsilon=doc["epsilon"],
        sample_budget=doc["sample_budget"],
        metric=Metric(doc["metric"]),
    )
    records = split.target_members + split.target_nonmembers
    scores = _blind_baseline_scores(attack, records, cfg, baseline_cfg, seed_tag=2)
    if doc.get("tau") is not None:
        cutoff = ThresholdModel(tau=doc["tau"], s_min=doc["s_min"], s_max=doc["s_max"])
        bits = [apply_threshold(cutoff, s) for s in scores]
    else:
        bits = [0] * len(scores)
    return [
        {"id": rec.id, "score": score, "bit": bit, "label": rec.label}
        for rec, score, bit in zip(records, scores, bits)
    ]


# ---------------------------------------------------------------------------
# evaluate: scores -> reports
# ---------------------------------------------------------------------------

def read_scores(path: str) -> tuple[dict, list[dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValidationError(f"empty scores file: {path}")
    header = json.loads(lines[0])
    if header.get("kind") != "scores":
        raise ValidationError(f"{path} is not a scores file")
    return header, [json.loads(line) for line in lines[1:]]


def cmd_evaluate(cfg: RunConfig) -> dict[str, EvalReport]:
    """Turn each attack's scores file into a report and a ROC CSV."""
    digest = cfg.digest()
    reports: dict[str, EvalReport] = {}
    for attack in cfg.attacks:
        spath = scores_path(cfg, attack)
        if not os.path.exists(spath):
            raise ValidationError(f"missing scores file {spath}; run attack first")
        header, rows = read_scores(spath)
        _check_digest(header.get("config_digest"), digest, spath)
        for row in rows:
            if row.get("label") is None:
                raise ValidationError(
                    f"record {row.get('id')!r} has no ground-truth label; cannot evaluate"
                )
        score_pairs = [(float(r["score"]), int(r["label"])) for r in rows]
        decision_pairs = [(int(r["bit"]), int(r["label"])) for r in rows]
        rep, curve = report(
            attack,
            score_pairs,
            decision_pairs,
            seed=cfg.seed,
            config_digest=digest,
            fpr_targets=cfg.fpr_targets,
            allow_unbalanced=cfg.allow_unbalanced,
            with_best_threshold_asr=cfg.best_threshold_asr,
        )
        with open(report_path(cfg, attack), "w", encoding="utf-8") as fh:
            fh.write(rep.to_json())
        with open(roc_path(cfg, attack), "w", encoding="utf-8") as fh:
            fh.write(roc_to_csv(curve))
        reports[attack] = rep
        log.info("evaluated %s: asr=%.4f auc=%.4f", attack, rep.asr, rep.auc)
    return reports


# ---------------------------------------------------------------------------
# pipeline: all stages in order
# ---------------------------------------------------------------------------

def cmd_pipeline(cfg: RunConfig) -> dict[str, EvalReport]:
    """score -> calibrate -> attack -> evaluate, sharing the stage code paths."""
    cmd_score(cfg)
    cmd_calibrate(cfg)
    cmd_attack(cfg)
    return cmd_evaluate(cfg)


def summary_table(reports: dict[str, EvalReport]) -> str:
    lines = [
        f"{'Attack':<14} | {'ASR':>7} | {'AUC':>7} | {'TPR@1%FPR':>9}",
        f"{'-' * 14}-+-{'-' * 7}-+-{'-' * 7}-+-{'-' * 9}",
    ]
    for attack, rep in reports.items():
        tpr1 = next(v for t, v in rep.tpr_at_fpr if t == 0.01)
        lines.append(f"{attack:<14} | {rep.asr:>7.4f} | {rep.auc:>7.4f} | {tpr1:>9.4f}")
    return "\n".join(lines)
