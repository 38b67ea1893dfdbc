"""Walkthrough of the core solver pieces on one small instance.

Generates a sparse recovery problem, runs the l1 solver (soft thresholding)
and the l0 solver (hard thresholding) with constant 1/L steps, and prints how
the objective and the recovery error evolve. No trained schedules involved.

Usage:
    python3 demos/solver_basics.py [--seed 0]
"""

import argparse

import numpy as np

from proxunfold import (ProblemConfig, Regularizer, StepSchedule,
                        generate_problem, lipschitz_constant, mse_db,
                        run_solver, sample_matrix)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    config = ProblemConfig(n=100, m=70, p=0.1, snr_db=20.0, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    a = sample_matrix(config, rng)
    problem = generate_problem(config, rng, a=a)
    support = np.count_nonzero(problem.x_true)
    print(f"instance: n={config.n}, m={config.m}, {support} nonzeros, "
          f"noise variance {problem.sigma_v2:.4f}")

    big = lipschitz_constant(a)
    print(f"largest eigenvalue of A^T A: {big:.4f} -> step 1/L = {1.0 / big:.4f}\n")

    t_steps = 50
    schedule = StepSchedule.constant(1.0 / big, t_steps)
    for reg in (Regularizer.l1(), Regularizer.l0()):
        traj = run_solver(problem, schedule, reg, t_steps)
        print(f"--- {reg.kind} solver (lambda={reg.lam}) ---")
        for t in (0, 1, 2, 5, 10, 20, 50):
            print(f"  t={t:3d}  objective {traj.objectives[t]:10.4f}   "
                  f"mse {traj.mses[t]:8.2f} dB")
        nnz = np.count_nonzero(traj.x_final)
        print(f"  final support size {nnz} (truth {support}), "
              f"final mse {mse_db(traj.x_final, problem.x_true):.2f} dB\n")

    # too-large steps diverge; the solver reports the offending iteration
    from proxunfold import DivergenceError
    wild = StepSchedule.constant(50.0 / big, t_steps)
    try:
        run_solver(problem, wild, Regularizer.l1(), t_steps)
    except DivergenceError as exc:
        print(f"step 50/L diverges as expected: {exc}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
