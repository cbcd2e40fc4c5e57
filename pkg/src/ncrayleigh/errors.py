"""Exception hierarchy shared by the numerical routines."""


class NcRayleighError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NcRayleighError, ValueError):
    """An argument lies outside the domain of a function."""


class BracketInvalid(NcRayleighError, ValueError):
    """Root bracket endpoints do not straddle a sign change."""


class NoConvergence(NcRayleighError, ArithmeticError):
    """An iterative method exhausted its budget before meeting tolerance."""


class NonFinite(NcRayleighError, ArithmeticError):
    """An integrand or objective produced a NaN or infinite value."""


class NoSolution(NcRayleighError):
    """The requested operating point admits no solution (not a failure)."""


class MissingColumn(NcRayleighError, KeyError):
    """Sweep rows lack a column that an output figure needs."""
