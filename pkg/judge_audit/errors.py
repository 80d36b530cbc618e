"""Error hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI uses when it reaches the top level.
"""

from typing import Optional


class AuditError(Exception):
    """Base class for every expected failure in an audit."""

    exit_code = 1

    def __init__(self, message: str, *, stage: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage

    def in_stage(self, stage: str) -> "AuditError":
        """Attach the pipeline stage unless an inner stage is already recorded."""
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


class InputError(AuditError):
    """Malformed input files, unknown criteria or invalid arguments."""

    exit_code = 2


class NumericError(AuditError):
    """Degenerate or underdetermined fits, non-convergence, disconnected graphs."""

    exit_code = 3


class JudgeRequestError(AuditError):
    """Judge endpoint failures: exhausted retries or non-retryable responses."""

    exit_code = 4
