"""Exception hierarchy. Each leaf maps to one CLI exit code."""

from __future__ import annotations

from typing import Any, Optional


class PersuasionError(Exception):
    exit_code: int = 1


class PreconditionError(PersuasionError, ValueError):
    """Inputs outside a family's stated region, or malformed values."""

    exit_code = 2


class PolicyFormatError(PreconditionError):
    """A policy or utility file could not be parsed."""


class FeasibilityError(PersuasionError):
    """Empty feasible interval, mass outside I, or no bound from the family."""

    exit_code = 3


class SolverError(PersuasionError):
    """Numerical failure. ``best`` holds the closest partial result, if any."""

    exit_code = 4

    def __init__(self, message: str, best: Optional[Any] = None):
        super().__init__(message)
        self.best = best
