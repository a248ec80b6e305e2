"""
Stancy Errors

Exception hierarchy shared by every module. Library code raises these;
the command-line boundary maps them to exit codes.
"""

from typing import Iterable, List, Optional


class StancyError(Exception):
    """Base class for all toolkit errors."""


class IngestionError(StancyError):
    """A required input file is missing or unreadable."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path


class RecordError(StancyError):
    """A record references ids that cannot be resolved."""

    def __init__(self, message: str, ids: Optional[Iterable[str]] = None):
        self.ids: List[str] = sorted(str(i) for i in (ids or []))
        if self.ids:
            message = f"{message}: {', '.join(self.ids)}"
        super().__init__(message)


class CanonicalParseError(StancyError):
    """A line of a line-delimited record file could not be parsed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class InputError(StancyError, ValueError):
    """Caller passed input that violates an operation's precondition."""


class ContractError(StancyError):
    """An internal contract was violated (wrong variant, bad label, ...)."""


class NumericalDegeneracyError(StancyError, ArithmeticError):
    """A computation is undefined for the given values (e.g. zero norm)."""


class TrainingError(StancyError):
    """Training could not produce a usable model."""


class DivergenceError(TrainingError):
    """The loss became NaN or infinite during optimisation."""


class SetupError(StancyError):
    """A required external resource (encoder, embedding table) is unavailable."""


class AlignmentError(StancyError):
    """Predictions and gold pairs do not cover the same pair ids."""

    def __init__(
        self,
        message: str,
        missing: Optional[Iterable[str]] = None,
        extra: Optional[Iterable[str]] = None,
        duplicates: Optional[Iterable[str]] = None,
    ):
        self.missing = sorted(missing or [])
        self.extra = sorted(extra or [])
        self.duplicates = sorted(duplicates or [])
        details = []
        if self.missing:
            details.append(f"missing: {', '.join(self.missing[:20])}")
        if self.extra:
            details.append(f"extra: {', '.join(self.extra[:20])}")
        if self.duplicates:
            details.append(f"duplicated: {', '.join(self.duplicates[:20])}")
        if details:
            message = f"{message} ({'; '.join(details)})"
        super().__init__(message)


class CheckpointLoadError(StancyError):
    """A checkpoint directory is missing parts or is corrupt."""


class ConfigValidationError(StancyError):
    """One or more configuration values are invalid."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"invalid configuration:\n{lines}")


class UsageError(StancyError):
    """Command-line usage is wrong."""
