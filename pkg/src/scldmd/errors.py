"""Exception hierarchy shared by all modules.

Each class carries the process exit code the command-line front end uses.
"""


class ScldmdError(Exception):
    exit_code = 1


class ConfigError(ScldmdError, ValueError):
    """Invalid run configuration or command-line value."""

    exit_code = 2


class FormatError(ScldmdError, ValueError):
    """Malformed dataset, model file, or other on-disk artifact."""

    exit_code = 3


class NumericalError(ScldmdError, ArithmeticError):
    exit_code = 4


class KernelDomainError(NumericalError):
    """Kernel exponent outside the representable range."""


class DegenerateDataError(NumericalError):
    """Data that yield an all-zero Gram matrix."""


class DivergenceError(NumericalError):
    """Non-finite state produced during time integration."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
