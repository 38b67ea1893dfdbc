"""Check the hand-rolled reverse-mode gradients against finite differences.

The trainer differentiates the unrolled solver with respect to the per-layer
step sizes using a taped backward pass. This script compares those gradients
with central finite differences on a batch of small problems, for both
regularizers and both losses, and prints the worst relative error seen.

Cases where some pre-threshold entry sits within 1e-4 of the threshold cut
are redrawn: at those points the loss is genuinely nondifferentiable and a
finite difference would straddle the kink.

Usage:
    python3 demos/gradient_check.py [--layers 4] [--cases 10]
"""

import argparse

import numpy as np

from proxunfold import (ProblemConfig, Regularizer, StepSchedule,
                        backward_step_sizes, forward_unrolled, loss_value,
                        sample_batch, sample_matrix, threshold_cut)


def fd_gradient(batch, alphas, reg, loss_kind, h=1e-6):
    t_layers = len(alphas)
    fd = np.zeros(t_layers)
    for t in range(t_layers):
        up, down = alphas.copy(), alphas.copy()
        up[t] += h
        down[t] -= h
        out_up, _ = forward_unrolled(batch, StepSchedule(up), reg, t_layers)
        out_dn, _ = forward_unrolled(batch, StepSchedule(down), reg, t_layers)
        fd[t] = (loss_value(out_up, batch, reg, loss_kind)
                 - loss_value(out_dn, batch, reg, loss_kind)) / (2.0 * h)
    return fd


def kink_free(tape, reg, margin=1e-4):
    for t in range(tape.t_layers):
        cut = threshold_cut(reg, float(tape.alphas[t]))
        if np.abs(np.abs(tape.rs[:, t, :]) - cut).min() <= margin:
            return False
    return True


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--layers", type=int, default=4)
    ap.add_argument("--cases", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    config = ProblemConfig(n=20, m=14, p=0.25, snr_db=15.0, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    for reg in (Regularizer.l1(), Regularizer.l0()):
        for loss_kind in ("supervised", "unsupervised"):
            worst = 0.0
            done = 0
            while done < args.cases:
                a = sample_matrix(config, rng)
                batch = sample_batch(config, 3, rng, a=a)
                alphas = 0.15 + 0.3 * rng.random(args.layers)
                sched = StepSchedule(alphas)
                _, tape = forward_unrolled(batch, sched, reg, args.layers)
                if not kink_free(tape, reg):
                    continue
                grads = backward_step_sizes(tape, batch, sched, reg, loss_kind)
                fd = fd_gradient(batch, alphas, reg, loss_kind)
                rel = np.abs(grads - fd) / np.maximum(np.abs(fd), 1e-8)
                worst = max(worst, float(rel.max()))
                done += 1
            print(f"{reg.kind:2s} / {loss_kind:12s}: {done} cases, "
                  f"{args.layers} layers, worst relative error {worst:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
