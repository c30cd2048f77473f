"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class SecrecyError(Exception):
    """Base class for every error raised by bmw_secrecy."""

    exit_code = 1


class ConfigError(SecrecyError):
    """Configuration file or override could not be parsed or is inconsistent."""

    exit_code = 2


class DomainError(SecrecyError, ValueError):
    """An argument violates a documented precondition or invariant."""

    exit_code = 3


class ConvergenceError(SecrecyError, RuntimeError):
    """A numerical routine failed to produce a finite result."""

    exit_code = 4
