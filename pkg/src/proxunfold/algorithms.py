"""Proximal-gradient solvers for sparse recovery: ISTA (l1) and IHT (l0).

Both algorithms iterate x^(t+1) = threshold(x^(t) - alpha_t A^T (A x^(t) - y))
from x^(0) = 0; they differ only in the thresholding operator. Step sizes come
from a per-iteration schedule, which is what training later adjusts.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError
from .metrics import mse_db
from .problem import SparseProblem

# Default regularization weights for the two penalties.
LAMBDA_L1 = 0.05
LAMBDA_L0 = 0.01
EPSILON_GUARD = 1e-10


@dataclass(frozen=True)
class Regularizer:
    """Sparsity penalty: lam * ||x||_1 (kind "l1") or lam * ||x||_0 (kind "l0")."""

    kind: str
    lam: float
    epsilon_guard: float = EPSILON_GUARD

    def __post_init__(self):
        if self.kind not in ("l1", "l0"):
            raise ValueError(f"regularizer kind must be 'l1' or 'l0', got {self.kind!r}")
        if self.lam <= 0.0:
            raise ValueError(f"regularization weight must be positive, got {self.lam}")
        if self.epsilon_guard <= 0.0:
            raise ValueError(f"epsilon guard must be positive, got {self.epsilon_guard}")

    @classmethod
    def l1(cls, lam: float = LAMBDA_L1) -> "Regularizer":
        return cls(kind="l1", lam=lam)

    @classmethod
    def l0(cls, lam: float = LAMBDA_L0) -> "Regularizer":
        return cls(kind="l0", lam=lam)

    def penalty(self, x: np.ndarray) -> float:
        if self.kind == "l1":
            return self.lam * float(np.sum(np.abs(x)))
        return self.lam * float(np.count_nonzero(x))


@dataclass
class StepSchedule:
    """Per-iteration step sizes alpha_0 .. alpha_{T-1}."""

    alphas: np.ndarray

    def __post_init__(self):
        self.alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float)).copy()
        if self.alphas.ndim != 1:
            raise ValueError(f"step sizes must be a vector, got shape {self.alphas.shape}")

    @classmethod
    def constant(cls, value: float, t_steps: int) -> "StepSchedule":
        if t_steps < 1:
            raise ValueError(f"schedule needs at least one step, got {t_steps}")
        return cls(alphas=np.full(t_steps, float(value)))

    def __len__(self) -> int:
        return self.alphas.size

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write("t,alpha\n")
            for t, alpha in enumerate(self.alphas):
                f.write(f"{t},{repr(float(alpha))}\n")

    @classmethod
    def load(cls, path) -> "StepSchedule":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float, ndmin=2)
        order = np.argsort(rows[:, 0])
        return cls(alphas=rows[order, 1])


@dataclass
class Trajectory:
    """Per-iteration objective and recovery error, x^(0) included at index 0.

    iterates is only populated when the solver is asked to record them
    (record="iterates"); metrics-only recording keeps long ensemble runs
    within a small memory footprint.
    """

    objectives: np.ndarray   # (T+1,)
    mses: np.ndarray         # (T+1,) in dB
    x_final: np.ndarray      # (n,)
    iterates: np.ndarray | None = None  # (T+1, n) when recorded

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write("t,objective,mse_db\n")
            for t in range(self.objectives.size):
                f.write(f"{t},{repr(float(self.objectives[t]))},"
                        f"{repr(float(self.mses[t]))}\n")


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """Shrink toward zero by tau; the l1 proximal operator. Exactly zero on |v| <= tau."""
    if tau < 0.0:
        raise ValueError(f"soft threshold needs tau >= 0, got {tau}")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def hard_threshold(v: np.ndarray, lam: float, alpha: float,
                   epsilon_guard: float = EPSILON_GUARD) -> np.ndarray:
    """Keep entries with |v| >= sqrt(2 lam alpha + epsilon_guard), zero the rest.

    The guard keeps the cut positive as alpha -> 0; boundary entries are kept.
    """
    radicand = 2.0 * lam * alpha + epsilon_guard
    if radicand < 0.0:
        raise ValueError(f"hard threshold radicand must be >= 0, got {radicand}")
    v = np.asarray(v, dtype=float)
    tau = math.sqrt(radicand)
    return np.where(np.abs(v) >= tau, v, 0.0)


def threshold_cut(reg: Regularizer, alpha: float) -> float:
    """Magnitude below which the regularizer's threshold maps to zero."""
    if reg.kind == "l1":
        return reg.lam * alpha
    return math.sqrt(2.0 * reg.lam * alpha + reg.epsilon_guard)


def _apply_threshold(r: np.ndarray, reg: Regularizer, alpha: float):
    """Threshold r and return (x, active mask). The mask marks pass-through entries.

    l1 activity is strict (|r| > cut); l0 keeps the boundary (|r| >= cut).
    """
    if reg.kind == "l1":
        cut = reg.lam * alpha
        x = soft_threshold(r, cut)
        mask = np.abs(r) > cut
    else:
        x = hard_threshold(r, reg.lam, alpha, reg.epsilon_guard)
        cut = math.sqrt(2.0 * reg.lam * alpha + reg.epsilon_guard)
        mask = np.abs(r) >= cut
    return x, mask


def gradient_step(x: np.ndarray, problem: SparseProblem, alpha: float) -> np.ndarray:
    """One step along the negative data-fidelity gradient: x - alpha A^T (A x - y)."""
    residual = problem.a @ x - problem.y
    return x - alpha * (problem.a.T @ residual)


def layer_step(a: np.ndarray, y: np.ndarray, x: np.ndarray, alpha: float,
               reg: Regularizer, t: int):
    """One gradient-plus-threshold iteration; the single kernel shared by the
    solver and the unrolled forward pass, so both produce bitwise-equal iterates.

    Returns (x_next, r, mask, residual) where r is the pre-threshold point and
    residual is A x - y. Raises DivergenceError naming the 0-based step index
    if r goes non-finite.
    """
    residual = a @ x - y
    r = x - alpha * (a.T @ residual)
    if not np.all(np.isfinite(r)):
        raise DivergenceError(t)
    x_next, mask = _apply_threshold(r, reg, alpha)
    return x_next, r, mask, residual


def objective_value(x: np.ndarray, problem: SparseProblem, reg: Regularizer) -> float:
    """Regularized least-squares objective 0.5 ||y - A x||^2 + penalty(x)."""
    residual = problem.a @ x - problem.y
    return 0.5 * float(residual @ residual) + reg.penalty(x)


def run_solver(problem: SparseProblem, schedule: StepSchedule, reg: Regularizer,
               t_steps: int | None = None, record="metrics") -> Trajectory:
    """Run ISTA (l1) or IHT (l0) for t_steps iterations from x^(0) = 0.

    The trajectory holds t_steps + 1 objective and MSE values (index 0 is the
    zero start). record controls the footprint: "metrics" (default) records
    the per-iteration curves, "iterates" additionally keeps every x^(t), and
    False evaluates only the final iterate, for long convergence runs.
    """
    if t_steps is None:
        t_steps = len(schedule)
    if not 0 <= t_steps <= len(schedule):
        raise ValueError(f"t_steps={t_steps} outside schedule of length {len(schedule)}")
    if record not in ("metrics", "iterates", True, False):
        raise ValueError(f"record must be 'metrics', 'iterates', or False, got {record!r}")
    x = np.zeros(problem.n)
    objectives = np.full(t_steps + 1, np.nan)
    mses = np.full(t_steps + 1, np.nan)
    iterates = np.zeros((t_steps + 1, problem.n)) if record == "iterates" else None
    if record or t_steps == 0:
        objectives[0] = objective_value(x, problem, reg)
        mses[0] = mse_db(x, problem.x_true)
    # overflow on a diverging run is expected and surfaces as DivergenceError
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(t_steps):
            x, _, _, _ = layer_step(problem.a, problem.y, x,
                                    float(schedule.alphas[t]), reg, t)
            if iterates is not None:
                iterates[t + 1] = x
            if record or t == t_steps - 1:
                objectives[t + 1] = objective_value(x, problem, reg)
                mses[t + 1] = mse_db(x, problem.x_true)
    return Trajectory(objectives=objectives, mses=mses, x_final=x, iterates=iterates)
