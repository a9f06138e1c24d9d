class PreconditionError(ValueError):
    """An input violates a named precondition of an operation."""

    def __init__(self, condition, message=None):
        self.condition = condition
        super().__init__(message or f"precondition violated: {condition}")


class DegeneratePressureError(ValueError):
    """The pressure derivative does not change sign exactly once."""


class InconsistencyError(RuntimeError):
    """Distinct coefficients produced numerically identical pressures."""


class InfeasibleRateError(RuntimeError):
    """No strictly feasible positive rate exists for the constraint system."""
