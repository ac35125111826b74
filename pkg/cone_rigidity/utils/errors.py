"""
Exception hierarchy and CLI exit-code mapping
"""

from typing import Optional

from pydantic import ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_WITNESS = 3
EXIT_INTERNAL = 4


class ConeRigidityError(Exception):
    """Base class for all toolkit errors"""


class GeometryDomainError(ConeRigidityError, ValueError):
    """Point outside the model tube (r <= 0 or beyond the tube radius)"""


class SeriesError(ConeRigidityError):
    """Invalid truncated-series operation"""


class SeriesOrderError(SeriesError):
    """Truncation order too small for the requested operation"""


class EigendataParseError(ConeRigidityError):
    """Malformed eigendata record"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class EigendataValidationError(ConeRigidityError, ValueError):
    """Well-formed eigendata record violating a block invariant"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class UnsupportedResonanceError(ConeRigidityError):
    """Resonance that would need a log ladder of degree two or more"""


class ClassificationInconsistencyError(ConeRigidityError):
    """Rule-table and series exponents disagree for a branch"""


class InternalCheckError(ConeRigidityError):
    """An internal numerical cross-check failed"""


class AngleConditionError(ConeRigidityError, ValueError):
    """Cone angle outside the range where the requested analysis applies"""


class SolverError(ConeRigidityError):
    """Discrete radial problem could not be assembled or solved"""


class ValenceError(ConeRigidityError, ValueError):
    """Tensor valence does not match the requested operator"""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception raised by a pipeline command to a process exit status"""
    if isinstance(exc, (ClassificationInconsistencyError, InternalCheckError)):
        return EXIT_INTERNAL
    if isinstance(exc, (ValidationError, ValueError, EigendataParseError, FileNotFoundError)):
        return EXIT_VALIDATION
    return EXIT_INTERNAL


def error_payload(exc: BaseException) -> dict:
    return {"error": {"type": type(exc).__name__, "message": str(exc)}}
