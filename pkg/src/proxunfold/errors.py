"""Exception types shared across the package."""


class DivergenceError(RuntimeError):
    """An iterate went non-finite during a solver or unrolled forward pass."""

    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"non-finite iterate at iteration {iteration}")


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within the iteration budget."""


class TapeMismatchError(ValueError):
    """A tape was replayed against a schedule or regularizer it was not built with."""


class TrainingError(RuntimeError):
    """Training aborted; carries the stage/update where it happened.

    The partial training log accumulated before the abort rides along in
    ``log`` so callers can still write it out.
    """

    def __init__(self, stage: int, update: int, reason: str, log=None):
        self.stage = stage
        self.update = update
        self.log = log
        super().__init__(f"training aborted at stage {stage}, update {update}: {reason}")
