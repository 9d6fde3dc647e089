"""Exception types shared across the package."""


class IfsLabError(Exception):
    """Base class for all package-specific errors."""


class ExprSyntaxError(IfsLabError):
    """Raised when expression source does not parse.

    Carries the zero-based character offset of the offending token.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (offset {position})")
        self.position = position


class EvalDomainError(IfsLabError):
    """Division by zero, log of a non-positive value, or a weight/derivative
    that is non-positive where a logarithm of it is required."""


class BindError(IfsLabError):
    """Parameter outside its declared interval, or binding produced an
    unusable system."""


class ValidationError(IfsLabError):
    """A precondition on a validated system does not hold."""


class BudgetError(IfsLabError):
    """An enumeration (atoms, words, matrix states) would exceed its cap."""


class ConvergenceError(IfsLabError):
    """An iteration (fixed point, power method) failed to converge."""


class BracketError(IfsLabError):
    """A root finder could not bracket a sign change."""


class NoiseFloorError(IfsLabError):
    """A smoothness diagnostic refused to classify because the quantity
    evaluation error is not safely below the smallest difference scale."""


class ConfigError(IfsLabError):
    """A configuration document is malformed or incomplete."""
