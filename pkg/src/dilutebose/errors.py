"""Exception hierarchy. The CLI maps each class to a fixed exit code."""


class DiluteBoseError(Exception):
    exit_code = 1


class VerificationError(DiluteBoseError):
    """A computed quantity disagrees with an independent check."""
    exit_code = 1


class ConfigError(DiluteBoseError, ValueError):
    exit_code = 2


class DomainError(DiluteBoseError, ValueError):
    """Input outside the admissible (dilute, weak-coupling) regime."""
    exit_code = 3


class NumericError(DiluteBoseError, RuntimeError):
    """Quadrature, ODE or series failed to converge to the requested tolerance."""
    exit_code = 4
