"""Exception types shared across the solver modules."""


class SolverError(RuntimeError):
    """A linear solve failed or did not reach the requested residual."""


class NewtonError(RuntimeError):
    """Newton iteration did not converge; carries the last residual."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ValidationError(ValueError):
    """A run configuration violates the model assumptions."""


class RunError(RuntimeError):
    """A simulation run could not be completed."""
