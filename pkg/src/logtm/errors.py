"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(ValueError):
    """Inputs are individually valid but cannot be combined as requested."""


class SaturationError(OverflowError):
    """A growth function left the floating-point range.

    ``value`` carries the offending argument (a level ``s`` or a radius).
    """

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class NumericalConsistencyError(ArithmeticError):
    """A computed quantity violates a property it must satisfy analytically."""


class DegenerateProfileError(ArithmeticError):
    """A ratio is undefined because its denominator vanishes."""
