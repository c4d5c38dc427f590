"""Exception types shared across the package."""


class MixoptError(Exception):
    """Base class for all package-specific errors."""


class SimplexError(MixoptError, ValueError):
    """Proportions are not a valid point on the probability simplex."""


class DimensionError(MixoptError, ValueError):
    """Array arguments have incompatible or unexpected shapes."""


class DegenerateMatrixError(MixoptError, ValueError):
    """A matrix or vector carries no usable signal (all zeros)."""


class FitError(MixoptError, RuntimeError):
    """Base class for failures while fitting a mixing law."""


class InsufficientSamplesError(FitError):
    """Too few samples for the number of free parameters."""


class SingularDesignError(FitError):
    """The design matrix of mixtures is rank deficient."""


class DegenerateScaleError(FitError):
    """The scale coefficient is unidentifiable (all predictors zero)."""


class ConvergenceError(FitError):
    """No optimizer restart produced a usable solution."""


class BudgetError(MixoptError, RuntimeError):
    """A training step was requested beyond the extra-step allowance."""


class SnapshotError(MixoptError, ValueError):
    """A snapshot does not belong to the trainer it was handed to."""


class TraceError(MixoptError, KeyError):
    """The requested round is absent from a method's parameter trace."""


class ComplexityError(MixoptError, RuntimeError):
    """An exhaustive enumeration would exceed the configured limit."""


class ConfigError(MixoptError, ValueError):
    """An experiment configuration failed to parse or validate."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
