"""Shared error types.

Every error carries a short machine-readable ``code`` (snake_case) so that
the stream server can map failures to protocol error frames and the CLI can
map them to exit codes without string matching on messages.
"""

from __future__ import annotations


class TurnwiseError(Exception):
    """Base class for all errors raised by this package."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class ValidationError(TurnwiseError):
    """Malformed or contract-violating input (CLI exit code 2)."""


class DegenerateDataError(TurnwiseError):
    """Statistically unusable input, e.g. zero variance (CLI exit code 3)."""


class StateError(TurnwiseError):
    """Operation not valid in the current lifecycle state."""
