"""Exception types shared across the package."""


class RejectedInputError(ValueError):
    """Input violates an operation's precondition (dimension mismatch, zero vector, ...)."""


class UnsupportedSizeError(RejectedInputError):
    """Operator dimension exceeds what the routine supports."""


class InconclusiveError(RuntimeError):
    """A numerical routine could not reach a verdict.

    ``payload`` carries whatever partial evidence was produced (best iterate,
    residuals) so callers can report it instead of discarding it.
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload if payload is not None else {}
