"""Shared report models, enums and exceptions for the lattice NLS toolkit."""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field

from .constants import (
    EXIT_INVALID_CONFIG,
    EXIT_NON_CONVERGENCE,
    EXIT_VERIFICATION_FAILED,
)


class StartKind(str, Enum):
    """Initial fields used by the multi-start solver."""

    TENT = "tent"
    BOX = "box"
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


class AlphaStatus(str, Enum):
    """How a threshold estimate relates to the scanned mass grid."""

    BRACKETED = "bracketed"
    CONSISTENT_WITH_ZERO = "consistent_with_zero"
    ABOVE_GRID = "above_grid"


class Direction(str, Enum):
    """Which side of the best constant a numerical estimate lies on."""

    LOWER = "lower"
    UPPER = "upper"


class CheckResult(BaseModel):
    """A single pass/fail entry of a report."""

    name: str
    passed: bool
    hard: bool = Field(default=True, description="Whether a failure fails the run")
    detail: str = ""
    witness: Optional[float] = None
    violation: Optional[dict[str, Any]] = None


class Report(BaseModel):
    """An ordered collection of checks."""

    title: str
    checks: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when no hard check failed."""
        return all(c.passed for c in self.checks if c.hard)

    def add(self, check: CheckResult) -> None:
        self.checks.append(check)

    def get(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if c.hard and not c.passed]


class ConstantEstimate(BaseModel):
    """One-sided numerical estimate of an inequality constant."""

    inequality: str
    d: int
    p: Optional[float] = None
    estimate: float
    direction: Direction
    box_L: int
    trials: int
    seed: int


# Exceptions
class LatticeNLSError(Exception):
    """Base exception for the toolkit; carries the CLI exit code."""

    exit_code: int = EXIT_INVALID_CONFIG

    def __init__(self, message: str, exit_code: Optional[int] = None):
        super().__init__(message)
        if exit_code is not None:
            self.exit_code = exit_code


class DomainMismatchError(LatticeNLSError):
    """Raised when fields on different domains are combined."""


class InvalidParameterError(LatticeNLSError):
    """Raised when an operation's preconditions on its parameters fail."""


class TableLookupError(LatticeNLSError):
    """Raised when a tabulated potential is evaluated outside its table."""


class ZeroFieldError(LatticeNLSError):
    """Raised when an operation needs a nonzero field."""


class DomainTooLargeError(LatticeNLSError):
    """Raised when an exhaustive oracle is asked to handle too many sites."""


class ConfigError(LatticeNLSError):
    """Raised when a run configuration cannot be parsed or validated."""


class EvolutionStepError(LatticeNLSError):
    """Raised when a time step's linear or fixed-point solve misses tolerance."""


class NonConvergenceError(LatticeNLSError):
    """Raised in strict mode when no start of a solve converged."""

    exit_code = EXIT_NON_CONVERGENCE

    def __init__(self, message: str, outcome: Any = None):
        super().__init__(message)
        self.outcome = outcome


class VerificationError(LatticeNLSError):
    """Raised when a verification suite has hard failures."""

    exit_code = EXIT_VERIFICATION_FAILED
