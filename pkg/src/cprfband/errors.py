"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent configuration parameters."""


class DomainError(ValueError):
    """A point lies outside the unit cube or an index is out of range."""


class EstimationError(RuntimeError):
    """An estimator could not produce a value (degenerate inputs)."""


class ParseError(ValueError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ResourceError(RuntimeError):
    """The requested computation would exceed memory limits."""


class NumericalError(RuntimeError):
    """A matrix factorization failed even after repair."""
