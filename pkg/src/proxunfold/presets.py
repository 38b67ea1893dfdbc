"""The four built-in experiment presets: {ista, iht} x {supervised, unsupervised}.

All four share the benchmark ensemble (n=300, m=210, p=0.1, SNR 20 dB) and
the training protocol (120 layers, 100 updates per stage, batches of 50);
they differ in the regularizer weight (0.05 for ista, 0.01 for iht), the
learning rate (5e-3 for ista, 1e-3 for iht), and the loss.
"""

from dataclasses import replace

from .algorithms import EPSILON_GUARD, LAMBDA_L0, LAMBDA_L1
from .experiment import ExperimentSpec
from .problem import ProblemConfig
from .training import LR_L0, LR_L1

PRESET_NAMES = ("ista-supervised", "ista-unsupervised",
                "iht-supervised", "iht-unsupervised")


def make_preset(name: str, seed: int = 0) -> ExperimentSpec:
    """Build one of the four named presets; seed is the only free knob."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}, choose from {PRESET_NAMES}")
    algorithm, loss_kind = name.split("-")
    ista = algorithm == "ista"
    return ExperimentSpec(
        label=name,
        seed=seed,
        lipschitz_matrices=100,
        problem=ProblemConfig(n=300, m=210, p=0.1, snr_db=20.0, seed=seed),
        algorithm=algorithm,
        loss_kind=loss_kind,
        lam=LAMBDA_L1 if ista else LAMBDA_L0,
        epsilon_guard=EPSILON_GUARD,
        lr=LR_L1 if ista else LR_L0,
        t_max=120,
        updates_per_stage=100,
        batch_size=50,
        resample_matrix=True,
        n_matrices=100,
        n_signals_per_matrix=100,
        t_steps=120,
    )


def all_presets(seed: int = 0) -> list:
    return [make_preset(name, seed=seed) for name in PRESET_NAMES]
