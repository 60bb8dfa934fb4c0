"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad widths, unknown keys, out-of-range values."""


class DivergenceError(RuntimeError):
    """Training or gradient evaluation produced a non-finite value.

    ``step`` is the 1-based training step at which divergence was detected,
    or None when raised outside the training loop.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConvergenceError(RuntimeError):
    """Iterative solver failed to reach its tolerance within the sweep budget.

    ``residual`` holds the last observed update magnitude.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class FieldFormatError(ValueError):
    """Malformed grid-field CSV. ``line`` is the offending 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
