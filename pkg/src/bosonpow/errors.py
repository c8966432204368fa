"""Exception types shared across the package."""


class BosonPowError(Exception):
    """Base class for errors raised by bosonpow."""


class DomainError(BosonPowError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class QuadratureError(BosonPowError, ArithmeticError):
    """A numerical integral did not reach the requested tolerance.

    Attributes
    ----------
    value : float
        Best available estimate of the integral.
    error : float
        Achieved absolute error estimate.
    """

    def __init__(self, message, value=float("nan"), error=float("inf")):
        super().__init__(f"{message} (value={value!r}, achieved error={error:.3g})")
        self.value = value
        self.error = error


class TruncationError(BosonPowError, ArithmeticError):
    """A series or Fock-space truncation could not be certified."""

    def __init__(self, message, bound=float("inf")):
        super().__init__(f"{message} (achieved bound={bound:.3g})")
        self.bound = bound


class DivergentIntegralError(BosonPowError, ValueError):
    """An infrared or ultraviolet divergent coupling integral was requested."""


class ConfigError(BosonPowError, ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"[{field}] {message}")
        self.field = field
