"""
Exception hierarchy shared by every densops module.

Library code raises these; the check runner catches DensopsError per check
and records it in the report instead of aborting the run.
"""

from typing import Optional


class DensopsError(Exception):
    """Base class for all domain errors."""

    kind = "error"


class ExprSyntaxError(DensopsError):
    kind = "syntax"

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class UndeclaredIdentifierError(DensopsError):
    kind = "undeclared"

    def __init__(self, name: str, position: Optional[int] = None):
        self.name = name
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"Undeclared identifier '{name}'{where}")


class NilpotencyError(ExprSyntaxError):
    """An odd expression raised to a power of two or more."""

    kind = "nilpotency"


class ChartMismatchError(DensopsError):
    kind = "chart"


class ParityError(DensopsError):
    kind = "parity"


class NonInvertibleError(DensopsError):
    kind = "non-invertible"


class DiffeomorphismError(DensopsError):
    kind = "diffeomorphism"


class NotSelfAdjointError(DensopsError):
    kind = "not-self-adjoint"


class NotNormalizedError(DensopsError):
    kind = "not-normalized"


class OrderError(DensopsError):
    kind = "order"


class PatternError(DensopsError):
    kind = "pattern"


class SingularWeightError(DensopsError):
    """Raised when a pencil cannot be reconstructed at the given weight.

    Args:
        condition: one of "lambda=0", "mu=1", "lambda+mu=1"
    """

    kind = "singular"

    def __init__(self, condition: str, message: Optional[str] = None):
        self.condition = condition
        super().__init__(message or f"Singular weight: {condition}")


class ExceptionalWeightError(DensopsError):
    kind = "exceptional"

    def __init__(self, weight, message: Optional[str] = None):
        self.weight = weight
        super().__init__(message or f"Exceptional weight {weight}")


class WeightConditionError(DensopsError):
    kind = "weight"


class DegenerateTensorError(DensopsError):
    kind = "degenerate"


class DarbouxError(DensopsError):
    kind = "darboux"


class NotSymplecticError(DensopsError):
    kind = "not-symplectic"


class UsageError(DensopsError):
    """A missing, malformed or mistyped command argument."""

    kind = "usage"


class CheckFileError(DensopsError):
    kind = "checkfile"

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f"line {line}"
            if column is not None:
                location += f", column {column}"
            location += ": "
        super().__init__(location + message)


def error_matches(error: Exception, expected: str) -> bool:
    """Tell whether an error satisfies an `error=...` expectation.

    The expectation names either an error kind ("singular"), a singular
    condition ("lambda+mu=1") or an exception class name.
    """
    if not expected:
        return isinstance(error, DensopsError)
    if getattr(error, "condition", None) == expected:
        return True
    if getattr(error, "kind", None) == expected:
        return True
    return type(error).__name__ == expected
