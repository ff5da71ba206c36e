"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain where a formula or function is defined."""


class InputError(ValueError):
    """Malformed or inconsistent input (configuration, data files, options)."""


class AccuracyError(ArithmeticError):
    """A numerical routine could not reach its requested accuracy.

    The best available value and its error estimate are kept on the
    exception so callers can decide whether to use them anyway.
    """

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class ConvergenceError(ArithmeticError):
    """Iterative eigenvalue algorithm did not converge."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ResourceError(MemoryError):
    """Requested problem size exceeds the configured memory budget."""
