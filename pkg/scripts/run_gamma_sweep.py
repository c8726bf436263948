#!/usr/bin/env python3
"""Sweep memorization strength and watch attack quality rise.

The sweep is the desk-scale analog of increasing fine-tuning epochs: the
longer a generator trains on its members, the more its outputs align with
them, and the easier membership inference becomes.
"""

import argparse

from miaudit import (
    SimConfig,
    TrainConfig,
    attack_scores,
    auc,
    profile,
    roc,
    sweep,
    train_mlp,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=21)
    parser.add_argument("--n", type=int, default=150)
    parser.add_argument(
        "--gammas",
        type=float,
        nargs="+",
        default=[0.45, 0.55, 0.65, 0.75, 0.9],
        help="memorization strengths to sweep",
    )
    parser.add_argument(
        "--noise",
        type=float,
        default=0.05,
        help="per-coordinate perturbation; larger values spread the transition",
    )
    args = parser.parse_args()

    base = SimConfig(
        k=32,
        d=64,
        n_members=args.n,
        n_nonmembers=args.n,
        m=3,
        gamma_mem=max(args.gammas),
        gamma_base=min(args.gammas),
        noise_sigma=args.noise,
        seed=args.seed,
    )
    print(f"{'gamma_mem':>9} | {'classifier AUC':>14}")
    print(f"{'-' * 9}-+-{'-' * 14}")
    for value, world in sweep(base, "gamma_mem", args.gammas):
        shadow = [
            profile(r) for r in world.split.shadow_members + world.split.shadow_nonmembers
        ]
        target = [
            profile(r) for r in world.split.target_members + world.split.target_nonmembers
        ]
        model = train_mlp(shadow, TrainConfig(seed=world.config.seed))
        labels = {p.record_id: p.label for p in target}
        results = attack_scores("classifier", model, target)
        value_auc = auc(roc([(s, labels[rid]) for rid, s, _ in results]))
        print(f"{value:>9.2f} | {value_auc:>14.4f}")


if __name__ == "__main__":
    main()
