"""
Error hierarchy for the quantization lab.

Every error carries a human-readable ``detail`` that the CLI prints verbatim.
"""
from typing import List, Optional


class QganError(Exception):
    """Base class for all lab errors."""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# =============================================================================
# QUANTIZER ERRORS
# =============================================================================

class EmptyTensor(QganError):
    """Raised when an operation needs at least one element."""


class InvalidTensor(QganError):
    """Raised when a tensor violates its shape or finiteness invariants."""


class InvalidParams(QganError):
    """Raised when quantization parameters are out of range."""


class ZeroRange(QganError):
    """Signal: max equals min, the range scaling is undefined."""


class DegenerateCodes(QganError):
    """Signal: all codes are equal, the least-squares slope is undefined."""


# =============================================================================
# STORAGE ERRORS
# =============================================================================

class DuplicateName(QganError):
    """Raised when an archive would contain two tensors with one name."""


class BadMagic(QganError):
    """Raised when a file does not start with the archive magic."""


class TruncatedFile(QganError):
    """Raised when an archive ends before its declared content."""


class StoreIoError(QganError):
    """Raised when the filesystem refuses a read or write."""


# =============================================================================
# TRAINING AND SEARCH ERRORS
# =============================================================================

class ShapeMismatch(QganError):
    """Raised when array dimensions do not chain."""


class TooShort(QganError):
    """Raised when a score history is too short to classify."""


class EvaluatorFailure(QganError):
    """Raised when an evaluator fails mid-search; keeps the trail so far."""

    def __init__(self, detail: str, trail: Optional[List] = None):
        super().__init__(detail)
        self.trail = list(trail or [])
