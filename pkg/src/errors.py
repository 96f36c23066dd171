"""
Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: DataError -> 3, NumericError -> 4.
"""

from typing import Optional


class EdgeGraspError(Exception):
    """Base class for all errors raised by this package."""


class DataError(EdgeGraspError, ValueError):
    """Malformed, insufficient or inconsistent input data."""


class NumericError(EdgeGraspError, ArithmeticError):
    """NaN or Inf detected in a numeric result."""


class GraspRejected(DataError):
    """A grasp frame or local region failed its validity checks."""

    def __init__(self, reason: str, detail: Optional[str] = None):
        self.reason = reason
        message = reason if detail is None else f"{reason}: {detail}"
        super().__init__(message)


class PlacementError(DataError):
    """A primitive could not be placed in a scene."""
