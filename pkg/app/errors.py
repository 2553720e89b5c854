"""
app/errors.py
=============
Exception hierarchy.  Every error carries the process exit code the CLI
returns when it escapes a subcommand:

    2 — configuration / argument errors (bad depth, shapes, parameters)
    3 — numeric failures (non-finite data, DARE divergence)
    4 — expressivity / persistency-of-excitation failures
"""


class HankelLabError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1


class ConfigError(HankelLabError, ValueError):
    """Invalid experiment configuration; the message names the field."""

    exit_code = 2


class DepthError(HankelLabError, ValueError):
    """Hankel depth incompatible with the data length."""

    exit_code = 2


class DimensionError(HankelLabError, ValueError):
    exit_code = 2


class WindowError(HankelLabError, ValueError):
    exit_code = 2


class ParameterError(HankelLabError, ValueError):
    exit_code = 2


class RealizationError(HankelLabError, ValueError):
    exit_code = 2


class SingularIndexError(HankelLabError, IndexError):
    exit_code = 2


class RowIndexError(HankelLabError, IndexError):
    """Hankel row index outside 0..L-1."""

    exit_code = 2


class NumericError(HankelLabError, ArithmeticError):
    exit_code = 3


class DareDivergenceError(NumericError):
    """Riccati iteration did not reach the tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ExpressivityError(HankelLabError):
    """Data matrix rank is below L + n."""

    exit_code = 4


class PersistencyError(HankelLabError):
    """Probing input failed the persistency-of-excitation check."""

    exit_code = 4
