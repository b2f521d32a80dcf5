"""Exception types shared across the package."""


class StaceyError(Exception):
    """Base class for all package errors."""


class InvalidVectorError(StaceyError, ValueError):
    """A parameter/gradient vector contains NaN or Inf, or has the wrong shape."""


class UnsupportedExponentError(StaceyError, ValueError):
    """The requested operation is not defined for this exponent."""


class DimensionMismatchError(StaceyError, ValueError):
    pass


class DivergenceError(StaceyError, FloatingPointError):
    """An iterate left the finite region (non-finite or |theta_i| > threshold)."""

    def __init__(self, index, value, step=None):
        self.index = int(index)
        self.value = float(value)
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"divergence{where}: coordinate {self.index} = {self.value!r}")


class ConfigError(StaceyError, ValueError):
    """Invalid experiment configuration (bad syntax, unknown key, bad value)."""
