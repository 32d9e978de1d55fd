"""Exception types raised by the solver."""


class DomainError(ValueError):
    """An input lies outside the domain of a closed-form relation."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class AdmissibilityError(ValueError):
    """A cell state violates an admissibility invariant.

    ``cell`` is the (i, j) index of the first offending interior cell (``j`` is
    0 in 1D) and ``invariant`` names the violated condition.
    """

    def __init__(self, invariant, cell=None, value=None, stage=None):
        self.invariant = invariant
        self.cell = cell
        self.value = value
        self.stage = stage
        msg = f"inadmissible state: {invariant}"
        if cell is not None:
            msg += f" at cell {cell}"
        if value is not None:
            msg += f" (value {value!r})"
        if stage is not None:
            msg += f" in {stage}"
        super().__init__(msg)


class SolverError(RuntimeError):
    """An iterative solve failed to converge."""

    def __init__(self, message, residuals=()):
        self.residuals = list(residuals)
        super().__init__(message)


class ConfigError(ValueError):
    pass


class AccuracyError(RuntimeError):
    pass


class ExtrapolationError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    """An internal invariant of an assembled operator does not hold."""
