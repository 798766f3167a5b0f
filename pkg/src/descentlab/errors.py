"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DescentLabError(Exception):
    exit_code = 2


class DomainError(DescentLabError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 1


class BoundaryError(DomainError):
    """Point lies on a cell boundary of the insertion grid."""


class SizeLimitError(DescentLabError):
    """Requested size exceeds a brute-force or memory guard."""

    exit_code = 3


class NumericalError(DescentLabError):
    exit_code = 2


class ConvergenceError(NumericalError):
    pass


class NegativeWeightError(NumericalError):
    """A transition count came out negative (state is not reachable)."""
