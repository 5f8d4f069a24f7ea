"""Exception hierarchy. Everything raised deliberately derives from GadiError."""


class GadiError(Exception):
    """Base class for library errors."""


class DimensionError(GadiError, ValueError):
    """Shapes are inconsistent or a size is out of range."""


class CapacityError(GadiError, OverflowError):
    """A result would exceed the representable index range."""


class BreakdownError(GadiError, ArithmeticError):
    """A Krylov method hit a non-positive curvature or zero normal-equation term."""


class InnerSolveError(GadiError):
    """An inner solve failed during an outer iteration.

    ``step`` is the outer step index at which the failure happened.
    """

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"outer step {step}: {message}")
        self.step = step


class SingularMatrixError(GadiError, ArithmeticError):
    """A factorization met a zero pivot."""


class FitError(GadiError):
    """Hyperparameter optimization failed for every restart.

    ``theta`` holds the best-effort ``(iota, sigma_f)`` pair, if any.
    """

    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


class TraversalError(GadiError):
    """No point of a parameter grid converged."""


class ConfigError(GadiError, ValueError):
    """Invalid solver or command configuration."""
