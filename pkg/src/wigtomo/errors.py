"""Exception hierarchy shared by all wigtomo modules.

The CLI maps these onto stable exit codes, so new error conditions should
reuse one of the existing classes rather than invent parallel ones.
"""


class WigtomoError(Exception):
    """Base class for all errors raised by wigtomo."""


class ConfigError(WigtomoError):
    """Invalid or missing configuration (CLI exit code 2)."""


class UnsupportedError(WigtomoError):
    """Requested feature is outside the implemented range (CLI exit code 3)."""


class DomainError(WigtomoError, ValueError):
    """Arguments violate an operation's precondition."""


class GridMismatchError(DomainError):
    """Operands live on different sphere grids or label sets (CLI exit code 4)."""


class DegenerateInputError(WigtomoError):
    """Input carries no usable signal, e.g. an all-zero correlation matrix
    (CLI exit code 5)."""


class CalibrationError(DegenerateInputError):
    """Calibration signal is too degenerate to extract a phase."""
