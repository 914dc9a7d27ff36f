"""Error hierarchy shared by the library and the CLI."""

from typing import Any, Dict, Optional


class MrGarkError(Exception):
    """Base class for every error raised by the package."""

    code = "MrGarkError"
    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details
        self.trajectory: Optional[Any] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, **self.details}


class StructuralError(MrGarkError):
    """Tableau or coupling shapes are inconsistent."""
    code = "StructuralError"


class SingularWeights(MrGarkError):
    """A weight vector that must be inverted has a zero or negative entry."""
    code = "SingularWeights"


class InvalidEta(MrGarkError):
    """An eta family violates its sum rule."""
    code = "InvalidEta"


class InvalidOuter(MrGarkError):
    """The outer method of an MIS pair is not admissible."""
    code = "InvalidOuter"


class SingularResolvent(MrGarkError):
    """I + r*Ahat is singular."""
    code = "SingularResolvent"


class NonConvergence(MrGarkError):
    """Newton iteration did not reach the tolerance."""
    code = "NonConvergence"


class SingularJacobian(MrGarkError):
    """Newton matrix could not be factorized."""
    code = "SingularJacobian"


class Diverged(MrGarkError):
    """Non-finite values appeared in the right-hand side or the solution."""
    code = "Diverged"


class Unsupported(MrGarkError):
    """The requested analysis does not apply to this scheme."""
    code = "Unsupported"


class DomainError(MrGarkError):
    """An argument lies outside the domain of the operation."""
    code = "DomainError"


class InvalidParameter(MrGarkError):
    """A user supplied parameter is invalid."""
    code = "InvalidParameter"
    exit_code = 2


class UnknownScheme(MrGarkError):
    """No base method or catalog scheme has this name."""
    code = "UnknownScheme"
    exit_code = 2


class UnknownProblem(MrGarkError):
    """No registered problem has this name."""
    code = "UnknownProblem"
    exit_code = 2


class SchemeFileError(MrGarkError):
    """A tableau file is missing or malformed."""
    code = "SchemeFileError"
    exit_code = 2
