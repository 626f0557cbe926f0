"""Exception types shared across the package."""


class DelaunayError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(DelaunayError, ValueError):
    """A parameter lies outside the admissible domain."""


class IntegrationError(DelaunayError):
    """The ODE integrator failed; carries the last good state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class AnnulusExitError(DelaunayError):
    """A forced trajectory left the admissible phase-plane annulus."""

    def __init__(self, message, exit_psi):
        super().__init__(message)
        self.exit_psi = exit_psi


class ConvergenceError(DelaunayError):
    """Newton iteration did not converge; carries the residual history."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class StructureError(DelaunayError):
    """A one-period matrix does not have the expected unipotent form."""

    def __init__(self, message, defect):
        super().__init__(message)
        self.defect = defect


class ProjectionError(DelaunayError):
    """A sample is too far from the reference orbit to be projected."""


class DegenerateError(DelaunayError):
    """The requested quantity degenerates (cylinder limit)."""


class DegenerateLimitWarning(UserWarning):
    """A limit value was substituted for a numerically degenerate computation."""
