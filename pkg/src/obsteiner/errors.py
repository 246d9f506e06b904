"""Exception hierarchy. CLI exit codes are attached to each class."""

from __future__ import annotations


class ObSteinerError(Exception):
    exit_code = 1


class ValidationError(ObSteinerError, ValueError):
    exit_code = 1


class NoPathError(ObSteinerError):
    """Target unreachable in the visibility graph."""

    exit_code = 2


class NoCandidateError(NoPathError):
    """Steiner search region does not meet free space."""


class GenerationError(ObSteinerError):
    exit_code = 3
