# src/tiadc_yield/core/errors.py


class TiadcError(Exception):
    """Base class for all errors raised by tiadc_yield"""


class InvalidInputError(TiadcError, ValueError):
    """Input violates a precondition (lengths, ranges, units, file format)"""


class IncoherentCaptureError(InvalidInputError):
    """A predicted spur frequency does not land on the measurement bin grid"""


class NonConvergenceError(TiadcError, RuntimeError):
    """Root bracketing or inversion failed to converge"""
