"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``SpecError`` -> 2, ``DivergenceError`` -> 3,
``VerificationError`` -> 1.
"""

from __future__ import annotations


class CotransError(Exception):
    """Base class for all library errors."""


class SpecError(CotransError, ValueError):
    """Malformed input: bad schema field, unknown family, wrong group variant."""


class GroupError(SpecError):
    """An element does not belong to the group it is used with."""


class DimensionError(SpecError):
    """Matrix dimensions do not agree."""


class SingularError(CotransError, ArithmeticError):
    """A matrix is not invertible at the requested relative tolerance."""


class DivergenceError(CotransError, ArithmeticError):
    """Numerical integration produced non-finite values."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class GridRangeError(CotransError, IndexError):
    """A time argument falls outside the integrated grid."""


class VerificationError(CotransError):
    """A construction precondition or post-check failed.

    ``report`` carries the VerificationReport that triggered the failure.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ReplayError(CotransError):
    """A report cannot be replayed against the current version."""
