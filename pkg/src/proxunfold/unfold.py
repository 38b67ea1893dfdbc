"""Unrolled solver layers with reverse-mode gradients for the step sizes.

The solver's T iterations are treated as a T-layer network whose only
parameters are the per-iteration step sizes. The forward pass reuses the
solver's iteration kernel (so training sees exactly what the solver computes)
and records what the backward pass needs: the pre-threshold point, the
pass-through mask, and the data residual of each layer.

Subgradient conventions at the nondifferentiable points: the soft threshold
uses the zero (dead-zone) subgradient at |r| = cut, the hard threshold keeps
its boundary branch, and sign(0) = 0.
"""

from dataclasses import dataclass

import numpy as np

from .algorithms import Regularizer, StepSchedule, layer_step
from .errors import TapeMismatchError
from .problem import ProblemConfig, generate_problem, sample_matrix

LOSS_KINDS = ("supervised", "unsupervised")


@dataclass
class Batch:
    """A minibatch of instances sharing one measurement matrix."""

    a: np.ndarray        # (m, n)
    ys: np.ndarray       # (batch, m)
    x_trues: np.ndarray  # (batch, n)

    def __post_init__(self):
        m, n = self.a.shape
        if self.ys.ndim != 2 or self.ys.shape[1] != m:
            raise ValueError(f"ys has shape {self.ys.shape}, expected (batch, {m})")
        if self.x_trues.shape != (self.ys.shape[0], n):
            raise ValueError(f"x_trues has shape {self.x_trues.shape}, "
                             f"expected ({self.ys.shape[0]}, {n})")

    @property
    def size(self) -> int:
        return self.ys.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def m(self) -> int:
        return self.a.shape[0]


def sample_batch(config: ProblemConfig, batch_size: int, rng: np.random.Generator,
                 *, a: np.ndarray | None = None) -> Batch:
    """Draw a minibatch: one matrix (fresh unless given), then batch_size signals."""
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    if a is None:
        a = sample_matrix(config, rng)
    ys = np.empty((batch_size, config.m))
    x_trues = np.empty((batch_size, config.n))
    for i in range(batch_size):
        item = generate_problem(config, rng, a=a)
        ys[i] = item.y
        x_trues[i] = item.x_true
    return Batch(a=a, ys=ys, x_trues=x_trues)


@dataclass
class Tape:
    """Forward-pass records consumed by backward_step_sizes.

    Arrays are indexed (item, layer, coordinate); alphas and reg identify the
    schedule prefix and regularizer the tape was built with.
    """

    alphas: np.ndarray     # (T,)
    reg: Regularizer
    rs: np.ndarray         # (batch, T, n) pre-threshold points
    masks: np.ndarray      # (batch, T, n) pass-through masks
    residuals: np.ndarray  # (batch, T, m) A x^(t) - y
    outputs: np.ndarray    # (batch, n) final iterates

    @property
    def t_layers(self) -> int:
        return self.alphas.size


def forward_unrolled(batch: Batch, schedule: StepSchedule, reg: Regularizer,
                     t_layers: int | None = None):
    """Run the first t_layers solver iterations on every item in the batch.

    Returns (outputs, tape); outputs[i] is bitwise equal to what run_solver
    produces for item i, because both go through the same iteration kernel.
    """
    if t_layers is None:
        t_layers = len(schedule)
    if not 0 <= t_layers <= len(schedule):
        raise ValueError(f"t_layers={t_layers} outside schedule of length {len(schedule)}")
    nb, n, m = batch.size, batch.n, batch.m
    outputs = np.zeros((nb, n))
    rs = np.empty((nb, t_layers, n))
    masks = np.empty((nb, t_layers, n), dtype=bool)
    residuals = np.empty((nb, t_layers, m))
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(nb):
            x = np.zeros(n)
            for t in range(t_layers):
                x, r, mask, residual = layer_step(batch.a, batch.ys[i], x,
                                                  float(schedule.alphas[t]), reg, t)
                rs[i, t] = r
                masks[i, t] = mask
                residuals[i, t] = residual
            outputs[i] = x
    tape = Tape(alphas=schedule.alphas[:t_layers].copy(), reg=reg,
                rs=rs, masks=masks, residuals=residuals, outputs=outputs)
    return outputs, tape


def loss_value(outputs: np.ndarray, batch: Batch, reg: Regularizer,
               loss_kind: str) -> float:
    """Training loss, averaged per coordinate (divided by batch size times n).

    supervised:   squared recovery error against the ground-truth signals.
    unsupervised: the solver's own objective, no ground truth involved.
    """
    if loss_kind == "supervised":
        return float(np.mean((outputs - batch.x_trues) ** 2))
    if loss_kind == "unsupervised":
        total = 0.0
        for i in range(batch.size):
            residual = batch.a @ outputs[i] - batch.ys[i]
            total += 0.5 * float(residual @ residual) + reg.penalty(outputs[i])
        return total / (batch.size * batch.n)
    raise ValueError(f"loss kind must be one of {LOSS_KINDS}, got {loss_kind!r}")


def _check_tape(tape: Tape, schedule: StepSchedule, reg: Regularizer) -> None:
    t = tape.t_layers
    if len(schedule) < t or not np.array_equal(tape.alphas, schedule.alphas[:t]):
        raise TapeMismatchError(
            "tape was recorded with different step sizes than the given schedule")
    if reg != tape.reg:
        raise TapeMismatchError(
            f"tape was recorded with {tape.reg}, backward called with {reg}")


def backward_step_sizes(tape: Tape, batch: Batch, schedule: StepSchedule,
                        reg: Regularizer, loss_kind: str) -> np.ndarray:
    """Gradient of loss_value with respect to each step size, shape (T,).

    Walks the layers in reverse. At layer t the incoming sensitivity delta is
    masked by the threshold pass-through; the step size picks up the direct
    threshold-width term (soft threshold only; the hard threshold's kept
    branch does not depend on the step size) plus the gradient-step term, and
    delta is pulled back through (I - alpha_t A^T A).
    """
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"loss kind must be one of {LOSS_KINDS}, got {loss_kind!r}")
    _check_tape(tape, schedule, reg)
    t_layers = tape.t_layers
    grads = np.zeros(t_layers)
    if t_layers == 0:
        return grads
    scale = 1.0 / (batch.size * batch.n)
    for i in range(batch.size):
        x_hat = tape.outputs[i]
        if loss_kind == "supervised":
            delta = (2.0 * scale) * (x_hat - batch.x_trues[i])
        else:
            delta = scale * (batch.a.T @ (batch.a @ x_hat - batch.ys[i]))
            if reg.kind == "l1":
                delta = delta + (scale * reg.lam) * np.sign(x_hat)
        for t in range(t_layers - 1, -1, -1):
            u = np.where(tape.masks[i, t], delta, 0.0)
            if reg.kind == "l1":
                grads[t] -= reg.lam * float(u @ np.sign(tape.rs[i, t]))
            au = batch.a @ u
            grads[t] -= float(au @ tape.residuals[i, t])
            if t > 0:
                delta = u - float(tape.alphas[t]) * (batch.a.T @ au)
    return grads


def save_gradients(grads: np.ndarray, path) -> None:
    """Dump a step-size gradient vector as CSV with columns t,grad."""
    with open(path, "w") as f:
        f.write("t,grad\n")
        for t, g in enumerate(grads):
            f.write(f"{t},{repr(float(g))}\n")
