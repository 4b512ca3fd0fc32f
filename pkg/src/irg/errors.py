class IRGInputError(ValueError):
    """Invalid argument or precondition violation."""


class ResourceGuardError(RuntimeError):
    """Refused because the estimated work exceeds the configured budget."""

    def __init__(self, message: str, estimate: float | None = None):
        super().__init__(message)
        self.estimate = estimate
