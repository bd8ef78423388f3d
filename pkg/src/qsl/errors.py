"""Exception types shared across the package.

Two families exist because the CLI maps them to distinct exit codes:
bad input (2) and numerical trouble (3).
"""


class QSLError(Exception):
    """Base class for all errors raised by :mod:`qsl`."""


class ValidationError(QSLError, ValueError):
    """Input does not satisfy a documented precondition.

    ``field`` names the offending input (e.g. ``"boundary.K"``) when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class NumericalError(QSLError, ArithmeticError):
    """A computation failed: quadrature did not converge, the integrator
    underflowed, or a resolvent point sits on the spectrum."""


class EigenvalueCollision(NumericalError):
    """The requested spectral parameter is (numerically) an eigenvalue."""

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest
