"""
Exceptions for swinalign.

Every error derives from SwinAlignError and from the builtin it refines, so
callers that catch ValueError or RuntimeError keep working.
"""

from typing import Optional


class SwinAlignError(Exception):
    """Base class for all swinalign errors."""


class DimensionError(SwinAlignError, ValueError):
    """Raised when tensor shapes are inconsistent."""


class ConfigError(SwinAlignError, ValueError):
    """Raised for invalid configuration values or unknown config keys."""


class SpecError(ConfigError):
    """Raised for an invalid synthetic-data spec or split request."""


class ContractError(SwinAlignError, RuntimeError):
    """Raised when a call contract is violated by the caller."""


class FormatError(SwinAlignError, ValueError):
    """
    Raised when a binary file is malformed.

    :param message: What went wrong.
    :param offset: Byte offset at which the problem was detected.
    """

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class UnsupportedVersionError(FormatError):
    """Raised when a binary file declares a format version we cannot read."""


class NumericalError(SwinAlignError, ArithmeticError):
    """Raised when an operation produces NaN or Inf."""


class DivergenceError(NumericalError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} (step {step})")


class UsageError(SwinAlignError):
    """Raised for command-line misuse."""
