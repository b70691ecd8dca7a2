"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid shapes, widths, or settings supplied by the caller."""


class NumericalError(RuntimeError):
    """A dense factorization failed beyond recovery.

    Attributes
    ----------
    jitter : float
        The final diagonal inflation attempted before giving up.
    """

    def __init__(self, message, jitter=None):
        super().__init__(message)
        self.jitter = jitter


class OptimizationError(RuntimeError):
    """Every restart of a hyperparameter search failed numerically."""


class CapacityError(RuntimeError):
    """A size guard was exceeded (e.g. the dense joint-solve limit)."""


class DataFormatError(ValueError):
    """Malformed CSV/model file. Carries file and line context when known."""

    def __init__(self, message, path=None, line=None):
        if path is not None:
            where = f"{path}:{line}" if line is not None else str(path)
            message = f"{where}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line
