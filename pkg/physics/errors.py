# physics/errors.py
"""
Exception hierarchy for the rotator lab.

The CLI maps these to exit codes (see cli.py):
- DomainError, HorizonError -> usage (1)
- ConvergenceError, FitError -> numerical failure (2)
- PartialResultsError -> partial results (3)
"""
from __future__ import annotations


class LabError(Exception):
    """Base class for all lab errors."""


class DomainError(LabError, ValueError):
    """Argument outside the domain of an operation."""


class ConvergenceError(LabError, ArithmeticError):
    """A numerical method failed to reach its tolerance."""


class FitError(ConvergenceError):
    """A least-squares fit failed or its residual is above threshold."""


class HorizonError(LabError, IndexError):
    """Requested time lies beyond a computed horizon or timeline."""


class PartialResultsError(LabError):
    """An experiment finished with some stages failed."""

    def __init__(self, message: str, errors: list[str] | None = None):
        super().__init__(message)
        self.errors = errors or []
