"""Exception hierarchy.

``StatisticalError`` subclasses describe problems with the statistical
request itself (too few resamples, a singular scatter matrix, an estimator
that is undefined on a resample); the CLI maps them to exit code 3.
"""


class CheapBootError(Exception):
    """Base class for all package errors."""


class DomainError(CheapBootError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(CheapBootError, ValueError):
    """Malformed experiment configuration; ``path`` names the offending field."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class StatisticalError(CheapBootError):
    pass


class InsufficientResamples(StatisticalError, ValueError):
    """Raised when ``B`` is below the minimum a method needs."""

    def __init__(self, method, B, required):
        self.method = method
        self.B = B
        self.required = required
        super().__init__(f"{method} requires B >= {required}, got B = {B}")


class SingularScatter(StatisticalError, ArithmeticError):
    """The resample scatter matrix is not positive definite."""


class EstimatorError(StatisticalError):
    """The estimator is undefined on its input.

    ``resample_index`` is filled in by the drivers when the failure happens on
    a resample rather than on the original data.
    """

    def __init__(self, message, resample_index=None):
        self.resample_index = resample_index
        if resample_index is not None:
            message = f"{message} (resample {resample_index})"
        super().__init__(message)
