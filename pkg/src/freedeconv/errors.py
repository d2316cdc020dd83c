"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where a formula is defined."""


class RecoveryError(RuntimeError):
    """A numerical stage of the recovery pipeline failed.

    Parameters
    ----------
    message : str
        Human-readable description.
    stage : str, optional
        Name of the pipeline stage that failed (``"eigenmatrix"``,
        ``"krylov"``, ``"esprit"``, ``"weights"``, ``"pivot"``, ...).
    """

    def __init__(self, message, stage=None):
        self.stage = stage
        if stage is not None:
            message = f"[{stage}] {message}"
        super().__init__(message)


class ConvergenceError(RecoveryError):
    """An iterative solver ran out of budget."""
