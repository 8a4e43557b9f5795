class EstimationError(RuntimeError):
    """A pipeline step could not produce an estimate. ``step`` names the failing stage."""

    def __init__(self, message: str, step: str | None = None):
        super().__init__(message if step is None else f"[{step}] {message}")
        self.step = step


class NoTargetError(EstimationError):
    """Model-order selection found no signal."""


class SingularSubspaceError(EstimationError):
    """The TLS partition needed for ESPRIT was singular."""


class UnobservableError(EstimationError):
    """A trigonometric denominator fell below the observability guard."""
