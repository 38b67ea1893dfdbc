"""Deep-unfolded ISTA/IHT: trainable per-iteration step sizes for sparse recovery.

The pipeline is problem generation -> solver/unrolled forward -> step-size
training -> ensemble evaluation, with a CLI tying the phases together.
"""

from .algorithms import (EPSILON_GUARD, LAMBDA_L0, LAMBDA_L1, Regularizer,
                         StepSchedule, Trajectory, gradient_step, hard_threshold,
                         objective_value, run_solver, soft_threshold, threshold_cut)
from .errors import (DivergenceError, PowerIterationError, TapeMismatchError,
                     TrainingError)
from .evaluation import (EvalConfig, EvalReport, VariantResult, VariantSpec,
                         baseline_variants, evaluate)
from .experiment import (ExperimentSpec, SpecError, desk_scale, parse_spec_file,
                         parse_spec_text, spec_to_text, subsystem_rng, write_manifest)
from .metrics import MSE_FLOOR_DB, mse_db
from .presets import PRESET_NAMES, all_presets, make_preset
from .problem import (LipschitzEstimate, ProblemConfig, SparseProblem,
                      average_lipschitz, generate_problem, lipschitz_constant,
                      load_problem, sample_matrix, save_problem,
                      snr_to_noise_variance)
from .training import (LR_L0, LR_L1, AdamState, TrainConfig, TrainLog, TrainRecord,
                       adam_update, incremental_train, project_nonnegative,
                       schedule_hash)
from .unfold import (LOSS_KINDS, Batch, Tape, backward_step_sizes, forward_unrolled,
                     loss_value, sample_batch, save_gradients)

__version__ = "0.1.0"
