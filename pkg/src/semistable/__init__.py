"""Symmetric semi-stable laws with log-periodic Lévy measure.

Exact exponent evaluation, a truncated compound-Poisson sampler, the
stationary AR(1) recursion with semi-stable marginals, and calibrated
characteristic-function checks.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AccuracyError,
    ConvergenceError,
    DomainError,
    EmptyInput,
    InsufficientData,
    InternalError,
    OrderError,
    RangeError,
    SemistableError,
)
from .model import *  # noqa: E402,F401,F403
from .sampler import *  # noqa: E402,F401,F403
from .ar1 import *  # noqa: E402,F401,F403
from .verification import *  # noqa: E402,F401,F403
