"""Incremental Adam training of the step schedule.

The schedule starts at the constant 1/L (L averaged over a matrix ensemble)
and is trained in stages: at stage T the first T layers are unrolled and all
step sizes alpha_0..alpha_{T-1} receive Adam updates, then T is incremented.
One optimizer state spans the whole run; entries whose stage has not started
yet have zero gradient and zero moments, so they stay bitwise untouched.
After every update negative step sizes are clipped to zero.
"""

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .algorithms import Regularizer, StepSchedule
from .errors import DivergenceError, TrainingError
from .problem import LipschitzEstimate, ProblemConfig, sample_matrix
from .unfold import LOSS_KINDS, backward_step_sizes, forward_unrolled, loss_value, sample_batch

# Learning rates used throughout: 5e-3 for the l1 solver, 1e-3 for the l0 solver.
LR_L1 = 5e-3
LR_L0 = 1e-3


@dataclass(frozen=True)
class TrainConfig:
    """Protocol knobs for one training run."""

    t_max: int = 120
    updates_per_stage: int = 100
    batch_size: int = 50
    lr: float = LR_L1
    loss_kind: str = "supervised"
    reg: Regularizer = field(default_factory=Regularizer.l1)
    resample_matrix: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        # 0 is allowed so an untrained run reproduces the initialization exactly
        if self.updates_per_stage < 0:
            raise ValueError(f"updates_per_stage must be >= 0, got {self.updates_per_stage}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0.0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}")


@dataclass
class AdamState:
    """Adam moments and step counter; one vector entry per schedule entry."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    @classmethod
    def init(cls, size: int) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size))


def adam_update(params: np.ndarray, grads: np.ndarray, state: AdamState,
                lr: float):
    """One bias-corrected Adam step; returns (new params, new state).

    Entries with zero gradient and zero accumulated moments move by exactly
    zero, which is what keeps not-yet-trained schedule entries untouched.
    """
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError(f"shape mismatch: params {params.shape}, grads {grads.shape}, "
                         f"state {state.m.shape}")
    if not np.all(np.isfinite(grads)):
        raise ValueError("non-finite gradient")
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads ** 2
    m_hat = m / (1.0 - state.beta1 ** step)
    v_hat = v / (1.0 - state.beta2 ** step)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + state.eps_adam)
    new_state = AdamState(m=m, v=v, step=step, beta1=state.beta1,
                          beta2=state.beta2, eps_adam=state.eps_adam)
    return new_params, new_state


def project_nonnegative(schedule: StepSchedule) -> StepSchedule:
    """Clip negative step sizes to zero; applied after every Adam update."""
    return StepSchedule(alphas=np.maximum(schedule.alphas, 0.0))


def schedule_hash(schedule: StepSchedule) -> str:
    """Content hash of the schedule values (order-sensitive, bitwise)."""
    return hashlib.sha256(np.ascontiguousarray(schedule.alphas).tobytes()).hexdigest()


@dataclass(frozen=True)
class TrainRecord:
    """One parameter update: where it happened, the pre-update loss, and a
    hash of the post-update schedule. spawn_index identifies the minibatch
    RNG stream so the exact minibatch can be re-drawn later."""

    stage: int
    update: int
    loss: float
    schedule_hash: str
    spawn_index: int


@dataclass
class TrainLog:
    """Full update-by-update history of a training run."""

    records: list
    final_schedule: StepSchedule
    divergences: list = field(default_factory=list)  # (stage, update, layer)
    snapshots: list | None = None  # post-update schedule copies, if requested

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write("stage,update,loss\n")
            for rec in self.records:
                f.write(f"{rec.stage},{rec.update},{repr(rec.loss)}\n")

    def stage_losses(self, stage: int) -> np.ndarray:
        return np.array([rec.loss for rec in self.records if rec.stage == stage])


def incremental_train(config: TrainConfig, problem_config: ProblemConfig,
                      l_avg: LipschitzEstimate,
                      rng: np.random.Generator | None = None,
                      snapshot_schedules: bool = False):
    """Train the step schedule stage by stage; returns (schedule, log).

    Every update attempt draws its minibatch from a freshly spawned child
    stream of ``rng``, so runs are reproducible and individual minibatches
    can be reconstructed from the recorded spawn index. A divergent forward
    pass is logged and the minibatch resampled once; two consecutive
    divergences abort the run with the partial log attached.

    With ``snapshot_schedules`` the log additionally keeps a copy of the
    schedule after every update (diagnostic use; off by default because it
    stores t_max floats per update).
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(config.seed, spawn_key=(2,))))
    init_alpha = 1.0 / l_avg.l_avg
    schedule = StepSchedule.constant(init_alpha, config.t_max)
    state = AdamState.init(config.t_max)
    fixed_a = None
    if not config.resample_matrix:
        fixed_a = sample_matrix(problem_config, rng)
    records = []
    divergences = []
    snapshots = [] if snapshot_schedules else None
    spawn_index = 0
    for stage in range(1, config.t_max + 1):
        failures = 0
        update = 0
        while update < config.updates_per_stage:
            batch_rng = rng.spawn(1)[0]
            this_spawn = spawn_index
            spawn_index += 1
            batch = sample_batch(problem_config, config.batch_size, batch_rng, a=fixed_a)
            try:
                outputs, tape = forward_unrolled(batch, schedule, config.reg, stage)
            except DivergenceError as exc:
                divergences.append((stage, update, exc.iteration))
                failures += 1
                if failures >= 2:
                    log = TrainLog(records=records, final_schedule=schedule,
                                   divergences=divergences, snapshots=snapshots)
                    raise TrainingError(
                        stage, update,
                        f"two consecutive divergent minibatches (layer {exc.iteration})",
                        log=log) from exc
                continue
            failures = 0
            loss = loss_value(outputs, batch, config.reg, config.loss_kind)
            grads_active = backward_step_sizes(tape, batch, schedule, config.reg,
                                               config.loss_kind)
            grads = np.zeros(config.t_max)
            grads[:stage] = grads_active
            if not (math.isfinite(loss) and np.all(np.isfinite(grads))):
                log = TrainLog(records=records, final_schedule=schedule,
                               divergences=divergences, snapshots=snapshots)
                raise TrainingError(stage, update, "non-finite loss or gradient", log=log)
            alphas, state = adam_update(schedule.alphas, grads, state, config.lr)
            schedule = project_nonnegative(StepSchedule(alphas=alphas))
            records.append(TrainRecord(stage=stage, update=update, loss=loss,
                                       schedule_hash=schedule_hash(schedule),
                                       spawn_index=this_spawn))
            if snapshots is not None:
                snapshots.append(schedule.alphas.copy())
            update += 1
    return schedule, TrainLog(records=records, final_schedule=schedule,
                              divergences=divergences, snapshots=snapshots)
