"""Exception hierarchy.

Everything raised on purpose by this package derives from ``SemistableError``,
which lets the command-line layer map bad input to exit code 2 without
swallowing genuine bugs.
"""


class SemistableError(Exception):
    """Base class for package errors."""


class RangeError(SemistableError, ValueError):
    """A parameter lies outside its admissible range.

    The offending parameter name is kept in ``field`` so callers (and the CLI)
    can report it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(SemistableError, ValueError):
    """A function was evaluated outside its domain."""


class OrderError(SemistableError, ValueError):
    """A time grid is not sorted, or does not start at zero."""


class ConvergenceError(SemistableError, ArithmeticError):
    """Numerical integration failed to reach the requested accuracy."""


class AccuracyError(SemistableError, ValueError):
    """A simulation setting is too coarse for a faithful approximation."""


class EmptyInput(SemistableError, ValueError):
    pass


class InsufficientData(SemistableError, ValueError):
    pass


class InternalError(SemistableError, RuntimeError):
    pass
