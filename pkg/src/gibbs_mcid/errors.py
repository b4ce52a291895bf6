"""Exception hierarchy.

CLI exit-code mapping: ValidationError and subclasses -> 1,
NumericalError and subclasses -> 2.
"""


class GibbsMcidError(Exception):
    """Base class for all package errors."""


class ValidationError(GibbsMcidError, ValueError):
    """Bad inputs: parameter domains, malformed data, unknown names."""


class DomainError(ValidationError):
    """A function was evaluated outside its domain."""


class NoRootError(ValidationError):
    """eta does not bracket 1/2 on the hinted support interval."""


class ConfigError(ValidationError):
    """Scenario configuration file failed to parse or validate."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        loc = []
        if key:
            loc.append(f"key {key!r}")
        if line is not None:
            loc.append(f"line {line}")
        suffix = f" ({', '.join(loc)})" if loc else ""
        super().__init__(message + suffix)


class NumericalError(GibbsMcidError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


class InvariantViolationError(NumericalError):
    """A computed quantity contradicts a structural invariant."""


class MixingError(NumericalError):
    """An MCMC chain failed its mixing diagnostics."""
