"""Exception types raised by the solvers and the scenario runner."""


class ElapsedTimeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(ElapsedTimeError, ValueError):
    pass


class CFLViolationError(InvalidParameterError):
    def __init__(self, dt, bound, detail=""):
        self.dt = dt
        self.bound = bound
        msg = f"time step dt={dt:.6g} exceeds the CFL bound {bound:.6g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DomainTruncationError(InvalidParameterError):
    """Initial support would leave the age grid before the final time."""


class UnboundedHazardError(InvalidParameterError):
    """A sup-norm was requested for a hazard that is unbounded in activity."""


class NonFiringHazardError(ElapsedTimeError):
    """Survival integral diverges, so no stationary state exists."""


class OracleDomainError(ElapsedTimeError, ValueError):
    def __init__(self, t, blowup_time):
        self.t = t
        self.blowup_time = blowup_time
        super().__init__(
            f"t={t:.6g} is at or past the blow-up time T*={blowup_time:.10g}")


class SolverError(ElapsedTimeError):
    """Raised when a step fails; carries the step index."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
