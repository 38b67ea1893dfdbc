"""Train a short step schedule on a small ensemble and watch it beat 1/L.

A scaled-down version of the full pipeline, small enough to run in under a
minute: estimate L over the ensemble, train a 12-layer schedule with each
loss, then compare both against the constant baselines on fresh instances.

Usage:
    python3 demos/train_small.py [--algorithm ista|iht]
"""

import argparse
import time

import numpy as np

from proxunfold import (EvalConfig, ProblemConfig, Regularizer, TrainConfig,
                        VariantSpec, average_lipschitz, baseline_variants,
                        evaluate, incremental_train)
from proxunfold.experiment import RNG_EVAL, RNG_LIPSCHITZ, RNG_TRAIN, subsystem_rng
from proxunfold.training import LR_L0, LR_L1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--algorithm", choices=("ista", "iht"), default="ista")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    ista = args.algorithm == "ista"
    reg = Regularizer.l1() if ista else Regularizer.l0()
    lr = LR_L1 if ista else LR_L0
    problem = ProblemConfig(n=60, m=42, p=0.1, snr_db=20.0, seed=args.seed)
    t_max = 12

    l_est = average_lipschitz(problem, k=30,
                              rng=subsystem_rng(args.seed, RNG_LIPSCHITZ))
    print(f"L averaged over 30 matrices: {l_est.l_avg:.4f} "
          f"(init step {1.0 / l_est.l_avg:.4f})")

    schedules = {}
    for loss_kind in ("supervised", "unsupervised"):
        config = TrainConfig(t_max=t_max, updates_per_stage=40, batch_size=20,
                             lr=lr, loss_kind=loss_kind, reg=reg, seed=args.seed)
        t0 = time.time()
        schedule, log = incremental_train(config, problem, l_est,
                                          rng=subsystem_rng(args.seed, RNG_TRAIN))
        first = log.records[0].loss
        last = log.records[-1].loss
        print(f"{loss_kind}: {len(log.records)} updates in {time.time() - t0:.1f}s, "
              f"loss {first:.5f} -> {last:.5f}")
        print(f"  learned steps: {np.array2string(schedule.alphas, precision=3)}")
        schedules[loss_kind] = schedule

    variants = baseline_variants(l_est, t_max, reg)
    variants += [VariantSpec(f"{args.algorithm}-{kind}", sched, reg)
                 for kind, sched in schedules.items()]
    report = evaluate(EvalConfig(variants=variants, n_matrices=30,
                                 n_signals_per_matrix=10, t_steps=t_max,
                                 seed=args.seed),
                      problem, rng=subsystem_rng(args.seed, RNG_EVAL))
    print(f"\nfinal iteration over {report.n_instances} fresh instances:")
    for v in report.variants:
        note = f", {v.divergences} diverged" if v.divergences else ""
        print(f"  {v.label:24s} mse {v.mean_mse_db[-1]:8.2f} dB   "
              f"objective {v.mean_objective[-1]:.5f}{note}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
