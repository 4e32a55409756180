"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class ParityError(ValidationError):
    """Local dimension has the wrong parity for the requested family."""


class ResourceLimitError(RuntimeError):
    """A computation would exceed the configured Hilbert-space dimension cap."""
