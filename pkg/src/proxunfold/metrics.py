"""Recovery-error metric shared by the solver trajectories and the evaluator."""

import numpy as np

# An exact recovery has MSE 0 and -inf dB; report this floor instead so that
# curves stay finite and averaging stays well defined.
MSE_FLOOR_DB = -150.0


def mse_db(x_hat: np.ndarray, x_true: np.ndarray) -> float:
    """Mean squared error between two vectors, in dB: 10*log10(||x_hat - x_true||^2 / N).

    Values below MSE_FLOOR_DB (including the exact-recovery -inf) are clamped
    to the floor.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x_hat.shape != x_true.shape:
        raise ValueError(f"shape mismatch: {x_hat.shape} vs {x_true.shape}")
    mse = float(np.mean((x_hat - x_true) ** 2))
    if mse <= 0.0:
        return MSE_FLOOR_DB
    return max(10.0 * np.log10(mse), MSE_FLOOR_DB)
