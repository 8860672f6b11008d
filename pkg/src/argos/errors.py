"""Exception types raised by the identification pipeline."""


class ArgosError(Exception):
    """Base class for all package-specific errors."""


class DivergenceError(ArgosError):
    """Integration produced a non-finite state (trajectory blow-up)."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at integration step {step}")


class InsufficientDataError(ArgosError):
    """Too few samples for the requested filter window."""


class DegenerateGridError(ArgosError):
    """Regularization grid collapsed (e.g. response has no signal)."""


class ConvergenceError(ArgosError):
    """Coordinate descent failed to satisfy its optimality certificate."""

    def __init__(self, max_violation, sweeps, message=None):
        self.max_violation = max_violation
        self.sweeps = sweeps
        super().__init__(
            message
            or f"coordinate descent not converged after {sweeps} sweeps "
            f"(max KKT violation {max_violation:.3e})"
        )


class SingularFitError(ArgosError):
    """Least-squares subproblem is rank deficient."""
