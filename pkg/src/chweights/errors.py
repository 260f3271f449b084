"""Exception types shared across the package."""

from __future__ import annotations


class ChweightsError(ValueError):
    """Base class for every domain error raised by the library."""

    code = "error"

    def __init__(self, message: str, datum=None):
        super().__init__(message)
        self.datum = datum


class ShapeMismatch(ChweightsError):
    code = "shape_mismatch"


class NotComaximal(ChweightsError):
    """Raised when two polynomials share a root at the residue field."""

    code = "not_comaximal"


class GateViolation(ChweightsError):
    """A theorem hypothesis (gate, wall, regularity) does not hold."""

    code = "gate_violation"


class UnsupportedInput(ChweightsError):
    code = "unsupported"


class SchemaError(ChweightsError):
    """Malformed request payload."""

    code = "schema"
