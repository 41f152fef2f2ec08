"""Exception hierarchy shared by all modules.

Two families matter to callers: configuration problems (bad windows, wrong
arguments, mismatched tables) and data/numeric failures (unparseable files,
singular matrices). The CLI maps the first to exit code 2 and the second to 1.
"""


class QuantcondError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(QuantcondError, ValueError):
    """Inconsistent or invalid user-supplied configuration."""


class DomainError(ConfigurationError):
    """An argument lies outside the domain of the function."""


class DataError(QuantcondError, ValueError):
    """Input data violates an invariant (non-positive price, missing cell...)."""


class ParseError(DataError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(QuantcondError, ArithmeticError):
    """Base class for numerical failures."""


class NotPositiveDefiniteError(NumericalError):
    """Cholesky factorization hit a non-positive pivot."""


class SingularMatrixError(NumericalError):
    """Matrix is singular or too ill-conditioned to solve reliably."""

    def __init__(self, message, assets=None):
        self.assets = list(assets) if assets is not None else []
        super().__init__(message)


class DegenerateBenchmarkError(NumericalError):
    """Benchmark variance over the conditioning window is zero."""


class DegenerateTangencyError(NumericalError):
    """The market portfolio normalizer e'S^-1 mu vanishes."""


class InfeasibleTargetError(NumericalError):
    """The target return cannot be reached by blending the two portfolios."""


class UndefinedSharpeError(NumericalError):
    """Sharpe ratio of a zero-volatility return series."""
