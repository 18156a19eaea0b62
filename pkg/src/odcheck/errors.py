"""Exception hierarchy shared by all checker modules."""

from __future__ import annotations


class CheckerError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CheckerError):
    """Syntax or name error in program source, with a 1-based location."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class ValidationError(CheckerError):
    """A program or store violates a structural invariant."""


class EvalOverflowError(CheckerError):
    """Arithmetic left the signed 64-bit range during evaluation."""


class NotEnabledError(CheckerError):
    """A thread was scheduled while terminated or out of range."""


class InfeasibleScheduleError(CheckerError):
    """A replayed schedule picked a thread that was not enabled."""


class BoundExceededError(CheckerError):
    """An execution ran past the depth bound where full coverage is required."""


class SignatureError(CheckerError):
    """Misuse of a signature store (non-dense key, double count, ...)."""


class CorruptSignatureError(SignatureError):
    """A signature file on disk failed structural validation."""


class CategoryError(CheckerError):
    """An initial-store category is ill-formed or duplicated."""


class VerificationError(CheckerError):
    """The verifier could not produce a meaningful verdict."""
