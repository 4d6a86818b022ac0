"""Exception types shared by the solver modules."""


class ArgumentError(ValueError):
    """Raised when an input violates a documented precondition."""


class SolverError(RuntimeError):
    """Raised when a linear solve fails to reach its tolerance.

    ``residual`` carries the last relative residual and ``step`` the time
    step index when the failure happened inside a time-stepping loop.
    """

    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step
