"""Exception types shared across the package."""


class OscNoiseError(Exception):
    """Base class for every error raised by this package."""


class DomainError(OscNoiseError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(OscNoiseError, RuntimeError):
    """A series or iterative scheme exhausted its budget before converging."""


class DecompositionError(OscNoiseError, RuntimeError):
    """A covariance matrix stayed non-positive-definite after jitter escalation."""


class InsufficientDataError(DomainError):
    """A trace is too short for the requested estimate."""


class NoSolutionError(DomainError):
    """A solver target is unattainable."""


class TraceFormatError(OscNoiseError, ValueError):
    """A trace file failed to parse or validate."""
