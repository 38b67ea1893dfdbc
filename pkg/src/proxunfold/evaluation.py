"""Ensemble evaluation: average per-iteration recovery error and objective
over many (matrix, signal) draws for several step-size schedules at once.

Every variant sees exactly the same instances (one noise realization per
instance, shared across variants) so the curves differ only by schedule.
Divergent runs are excluded from the means and counted per variant. The
reduction is per-matrix partial sums combined in matrix-index order, so the
result is bitwise identical no matter how many threads run the matrices.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algorithms import Regularizer, StepSchedule, run_solver
from .errors import DivergenceError
from .metrics import MSE_FLOOR_DB, mse_db
from .problem import ProblemConfig, generate_problem, LipschitzEstimate, sample_matrix

__all__ = ["EvalConfig", "VariantSpec", "VariantResult", "EvalReport",
           "baseline_variants", "evaluate", "mse_db", "MSE_FLOOR_DB"]


@dataclass
class VariantSpec:
    """One curve in the comparison: a label, a schedule, and its regularizer."""

    label: str
    schedule: StepSchedule
    reg: Regularizer

    def __post_init__(self):
        if not self.label or any(c in self.label for c in ",\n\r"):
            raise ValueError(f"variant label must be nonempty CSV-safe text, got {self.label!r}")


@dataclass
class EvalConfig:
    """Ensemble size and iteration budget for one evaluation run."""

    variants: list
    n_matrices: int = 100
    n_signals_per_matrix: int = 100
    t_steps: int = 120
    seed: int = 0

    def __post_init__(self):
        if self.n_matrices < 1 or self.n_signals_per_matrix < 1 or self.t_steps < 1:
            raise ValueError("ensemble counts and t_steps must be >= 1")
        if not self.variants:
            raise ValueError("need at least one variant to evaluate")
        labels = [v.label for v in self.variants]
        if len(set(labels)) != len(labels):
            raise ValueError(f"variant labels must be unique, got {labels}")
        for v in self.variants:
            if len(v.schedule) < self.t_steps:
                raise ValueError(f"variant {v.label!r} schedule has {len(v.schedule)} "
                                 f"entries, needs >= {self.t_steps}")


@dataclass
class VariantResult:
    """Mean curves for one variant plus how many runs diverged."""

    label: str
    mean_mse_db: np.ndarray     # (t_steps+1,)
    mean_objective: np.ndarray  # (t_steps+1,)
    divergences: int
    n_averaged: int
    schedule: StepSchedule


@dataclass
class EvalReport:
    """All variant curves from one evaluation run."""

    variants: list
    t_steps: int
    n_instances: int

    def variant(self, label: str) -> VariantResult:
        for v in self.variants:
            if v.label == label:
                return v
        raise KeyError(f"no variant labeled {label!r}")

    def save_panels(self, outdir) -> None:
        """Write mse.csv, objective.csv (t rows) and stepsize.csv (schedules)."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        labels = [v.label for v in self.variants]
        header = "t," + ",".join(labels) + "\n"
        with open(outdir / "mse.csv", "w") as f:
            f.write(header)
            for t in range(self.t_steps + 1):
                row = ",".join(repr(float(v.mean_mse_db[t])) for v in self.variants)
                f.write(f"{t},{row}\n")
        with open(outdir / "objective.csv", "w") as f:
            f.write(header)
            for t in range(self.t_steps + 1):
                row = ",".join(repr(float(v.mean_objective[t])) for v in self.variants)
                f.write(f"{t},{row}\n")
        with open(outdir / "stepsize.csv", "w") as f:
            f.write(header)
            for t in range(self.t_steps):
                row = ",".join(repr(float(v.schedule.alphas[t])) for v in self.variants)
                f.write(f"{t},{row}\n")


def baseline_variants(l_avg: LipschitzEstimate, t_steps: int, reg: Regularizer,
                      aggressive_factor: float = 2.1) -> list:
    """The two untrained references: constant 1/L and constant 2.1 * (1/L)."""
    base = 1.0 / l_avg.l_avg
    return [
        VariantSpec("alpha=1/L", StepSchedule.constant(base, t_steps), reg),
        VariantSpec(f"alpha={aggressive_factor}/L",
                    StepSchedule.constant(aggressive_factor * base, t_steps), reg),
    ]


def _run_matrix(child: np.random.Generator, config: EvalConfig,
                problem_config: ProblemConfig):
    """Evaluate all signals of one matrix; returns per-variant partial sums."""
    k = len(config.variants)
    t1 = config.t_steps + 1
    sum_mse = np.zeros((k, t1))
    sum_obj = np.zeros((k, t1))
    n_ok = np.zeros(k, dtype=int)
    n_div = np.zeros(k, dtype=int)
    a = sample_matrix(problem_config, child)
    for _ in range(config.n_signals_per_matrix):
        item = generate_problem(problem_config, child, a=a)
        for j, variant in enumerate(config.variants):
            try:
                traj = run_solver(item, variant.schedule, variant.reg, config.t_steps)
            except DivergenceError:
                n_div[j] += 1
                continue
            sum_mse[j] += traj.mses
            sum_obj[j] += traj.objectives
            n_ok[j] += 1
    return sum_mse, sum_obj, n_ok, n_div


def evaluate(config: EvalConfig, problem_config: ProblemConfig,
             rng: np.random.Generator | None = None, threads: int = 1) -> EvalReport:
    """Run every variant over the full (matrix, signal) ensemble.

    Each matrix gets its own spawned RNG stream, so results do not depend on
    scheduling; threads only speed up the embarrassingly parallel matrix loop.
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(config.seed, spawn_key=(3,))))
    children = rng.spawn(config.n_matrices)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(
                lambda c: _run_matrix(c, config, problem_config), children))
    else:
        partials = [_run_matrix(c, config, problem_config) for c in children]
    k = len(config.variants)
    t1 = config.t_steps + 1
    total_mse = np.zeros((k, t1))
    total_obj = np.zeros((k, t1))
    total_ok = np.zeros(k, dtype=int)
    total_div = np.zeros(k, dtype=int)
    for sum_mse, sum_obj, n_ok, n_div in partials:  # fixed matrix-index order
        total_mse += sum_mse
        total_obj += sum_obj
        total_ok += n_ok
        total_div += n_div
    results = []
    for j, variant in enumerate(config.variants):
        if total_ok[j] > 0:
            mean_mse = total_mse[j] / total_ok[j]
            mean_obj = total_obj[j] / total_ok[j]
        else:
            mean_mse = np.full(t1, np.nan)
            mean_obj = np.full(t1, np.nan)
        results.append(VariantResult(label=variant.label, mean_mse_db=mean_mse,
                                     mean_objective=mean_obj,
                                     divergences=int(total_div[j]),
                                     n_averaged=int(total_ok[j]),
                                     schedule=variant.schedule))
    return EvalReport(variants=results, t_steps=config.t_steps,
                      n_instances=config.n_matrices * config.n_signals_per_matrix)
