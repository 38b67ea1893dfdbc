"""Synthetic sparse-recovery instances and the ensemble Lipschitz constant.

An instance is y = A x_true + v with A an m-by-n Gaussian matrix (entries
N(0, 1/n)), x_true Bernoulli-Gaussian sparse, and v white Gaussian noise whose
variance is set from a target SNR. The Lipschitz constant of the data-fidelity
gradient is the largest eigenvalue of A^T A; for step-size initialization it
is averaged over a fresh ensemble of matrices.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PowerIterationError


@dataclass(frozen=True)
class ProblemConfig:
    """Dimensions and distribution parameters of the synthetic ensemble."""

    n: int = 300
    m: int = 210
    p: float = 0.1
    snr_db: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"signal dimension n must be >= 1, got {self.n}")
        if not 0 < self.m < self.n:
            raise ValueError(f"need 0 < m < n, got m={self.m}, n={self.n}")
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"nonzero probability p must be in (0, 1], got {self.p}")


@dataclass
class SparseProblem:
    """One recovery instance: measurement matrix, measurements, ground truth."""

    a: np.ndarray        # (m, n)
    y: np.ndarray        # (m,)
    x_true: np.ndarray   # (n,)
    sigma_v2: float

    def __post_init__(self):
        m, n = self.a.shape
        if self.y.shape != (m,):
            raise ValueError(f"y has shape {self.y.shape}, expected ({m},)")
        if self.x_true.shape != (n,):
            raise ValueError(f"x_true has shape {self.x_true.shape}, expected ({n},)")
        if self.sigma_v2 < 0.0:
            raise ValueError(f"noise variance must be >= 0, got {self.sigma_v2}")

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def m(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class LipschitzEstimate:
    """Largest eigenvalue of A^T A averaged over k_matrices sampled matrices."""

    l_avg: float
    k_matrices: int

    def __post_init__(self):
        if self.l_avg <= 0.0:
            raise ValueError(f"Lipschitz estimate must be positive, got {self.l_avg}")


def snr_to_noise_variance(snr_db: float, p: float, n: int) -> float:
    """Noise variance giving the requested SNR for the Bernoulli-Gaussian signal.

    The signal power is sigma_x^2 = p * n, so sigma_v^2 = p * n / 10^(snr_db/10).
    snr_db = +inf is the noiseless sentinel and returns 0.
    """
    if n < 1:
        raise ValueError(f"signal dimension n must be >= 1, got {n}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"nonzero probability p must be in (0, 1], got {p}")
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    sigma_x2 = p * n
    return sigma_x2 / 10.0 ** (snr_db / 10.0)


def sample_matrix(config: ProblemConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw one measurement matrix with i.i.d. N(0, 1/n) entries."""
    return rng.normal(0.0, 1.0 / math.sqrt(config.n), size=(config.m, config.n))


def generate_problem(config: ProblemConfig, rng: np.random.Generator,
                     *, a: np.ndarray | None = None) -> SparseProblem:
    """Draw one sparse-recovery instance from the ensemble.

    Draw order is fixed (matrix, support mask, nonzero values, noise) so that
    equal seeds give bitwise-equal problems. Passing ``a`` skips the matrix
    draw and reuses the given matrix; evaluation uses this to share one matrix
    across many signals.
    """
    if a is None:
        a = sample_matrix(config, rng)
    elif a.shape != (config.m, config.n):
        raise ValueError(f"matrix has shape {a.shape}, expected ({config.m}, {config.n})")
    support = rng.random(config.n) < config.p
    values = rng.standard_normal(config.n)
    x_true = np.where(support, values, 0.0)
    sigma_v2 = snr_to_noise_variance(config.snr_db, config.p, config.n)
    y = a @ x_true
    if sigma_v2 > 0.0:
        y = y + rng.normal(0.0, math.sqrt(sigma_v2), size=config.m)
    return SparseProblem(a=a, y=y, x_true=x_true, sigma_v2=sigma_v2)


def lipschitz_constant(a: np.ndarray, *, tol: float = 1e-10,
                       max_iter: int = 10_000) -> float:
    """Largest eigenvalue of A^T A by power iteration on x -> A^T (A x).

    Stops when the eigenvalue residual ||A^T A v - lam v|| <= tol * lam. Falls
    back to a dense symmetric eigensolve if the iteration stalls and n <= 512;
    otherwise raises PowerIterationError.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[1]
    v = np.full(n, 1.0 / math.sqrt(n))
    lam = 0.0
    for _ in range(max_iter):
        w = a.T @ (a @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # v in the nullspace; restart from a shifted direction
            v = np.zeros(n)
            v[0] = 1.0
            continue
        v_next = w / norm_w
        lam = float(v_next @ (a.T @ (a @ v_next)))
        residual = np.linalg.norm(a.T @ (a @ v_next) - lam * v_next)
        v = v_next
        if residual <= tol * max(lam, 1e-300):
            return lam
    if n <= 512:
        return float(np.linalg.eigvalsh(a.T @ a)[-1])
    raise PowerIterationError(
        f"no convergence after {max_iter} iterations (last eigenvalue {lam}, "
        f"residual tolerance {tol}); matrix too large for the dense fallback (n={n})"
    )


def average_lipschitz(config: ProblemConfig | None, k: int = 100,
                      rng: np.random.Generator | None = None,
                      *, matrices=None) -> LipschitzEstimate:
    """Mean largest eigenvalue of A^T A over k freshly sampled matrices.

    ``matrices`` bypasses the ensemble and averages over the given matrices
    instead (test hook and fixture replay); config is ignored then.
    """
    if matrices is not None:
        values = [lipschitz_constant(np.asarray(a, dtype=float)) for a in matrices]
        if not values:
            raise ValueError("matrices override must be non-empty")
        # same left-to-right reduction as the sampling path below, so both
        # routes agree bitwise on identical matrices
        return LipschitzEstimate(l_avg=sum(values) / len(values),
                                 k_matrices=len(values))
    if config is None:
        raise ValueError("need a config to sample matrices from")
    if k < 1:
        raise ValueError(f"need k >= 1 matrices, got {k}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    total = 0.0
    for _ in range(k):
        total += lipschitz_constant(sample_matrix(config, rng))
    return LipschitzEstimate(l_avg=total / k, k_matrices=k)


def save_problem(problem: SparseProblem, path) -> None:
    """Dump one instance as a flat CSV: A row-major, then y, x_true, sigma_v2."""
    flat = np.concatenate([problem.a.ravel(order="C"), problem.y,
                           problem.x_true, [problem.sigma_v2]])
    with open(path, "w") as f:
        for value in flat:
            f.write(repr(float(value)) + "\n")


def load_problem(path, m: int, n: int) -> SparseProblem:
    """Read back a flat CSV dump written by save_problem."""
    flat = np.loadtxt(Path(path), dtype=float)
    expected = m * n + m + n + 1
    if flat.size != expected:
        raise ValueError(f"fixture has {flat.size} values, expected {expected} for m={m}, n={n}")
    a = flat[: m * n].reshape(m, n)
    y = flat[m * n: m * n + m]
    x_true = flat[m * n + m: m * n + m + n]
    return SparseProblem(a=a, y=y, x_true=x_true, sigma_v2=float(flat[-1]))
