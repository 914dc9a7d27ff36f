"""Tableau data models using Pydantic."""

from enum import Enum
from typing import Any, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from ..config import NONZERO_THRESHOLD
from ..errors import StructuralError
from .eta import EtaFamily
from .fields import Array, ArrayList, to_array


class StructureTag(str, Enum):
    """Computational structure of a multirate scheme."""
    FULLY_COUPLED = "fully-coupled"
    FIRST_MICROSTEP = "first-microstep-coupled"
    STAGGERED = "staggered"
    EXPLICIT = "explicit"


class Severity(str, Enum):
    """Finding severity."""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"


def _with_row_sums(data: Any, matrix_key: str, c_key: str) -> Any:
    """Fill an omitted abscissa vector with the row sums of its matrix."""
    if not isinstance(data, dict) or data.get(c_key) is not None or matrix_key not in data:
        return data
    matrix = to_array(data[matrix_key])
    c = matrix.sum(axis=1) if matrix.ndim == 2 else np.zeros(0)
    return {**data, c_key: c}


class RkTableau(BaseModel):
    """One Runge-Kutta method (A, b, c)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: Array
    b: Array
    c: Array
    name: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _derive_c(cls, data: Any) -> Any:
        return _with_row_sums(data, "A", "c")

    @property
    def s(self) -> int:
        return int(self.b.shape[0])

    @property
    def is_explicit(self) -> bool:
        return bool(np.all(np.abs(np.triu(self.A)) <= NONZERO_THRESHOLD))

    @property
    def is_diagonally_implicit(self) -> bool:
        return bool(np.all(np.abs(np.triu(self.A, 1)) <= NONZERO_THRESHOLD))


class MrGarkScheme(BaseModel):
    """Fast and slow base methods plus per-microstep coupling matrices."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    fast: RkTableau
    slow: RkTableau
    M: int = Field(ge=1)
    couplings_fs: ArrayList
    couplings_sf: ArrayList
    eta: Optional[EtaFamily] = Field(default=None, exclude=True)
    name: Optional[str] = None

    @model_validator(mode="after")
    def _check_shapes(self) -> "MrGarkScheme":
        sf, ss = self.fast.s, self.slow.s
        for label, tab in (("fast", self.fast), ("slow", self.slow)):
            if tab.A.shape != (tab.s, tab.s) or tab.c.shape != (tab.s,):
                raise StructuralError(f"{label} tableau has inconsistent shapes")
        if len(self.couplings_fs) != self.M or len(self.couplings_sf) != self.M:
            raise StructuralError(
                f"expected {self.M} coupling matrices per direction, got "
                f"{len(self.couplings_fs)} fast-slow and {len(self.couplings_sf)} slow-fast"
            )
        for lam, (a_fs, a_sf) in enumerate(zip(self.couplings_fs, self.couplings_sf), start=1):
            if a_fs.shape != (sf, ss):
                raise StructuralError(f"A_fs[{lam}] has shape {a_fs.shape}, expected {(sf, ss)}")
            if a_sf.shape != (ss, sf):
                raise StructuralError(f"A_sf[{lam}] has shape {a_sf.shape}, expected {(ss, sf)}")
        return self

    @property
    def structure_tag(self) -> StructureTag:
        from ..services.tableau import classify_structure

        return classify_structure(self)

    @property
    def first_microstep_only(self) -> bool:
        """True when no slow stage reads a fast microstep beyond the first."""
        return all(np.all(np.abs(a) <= NONZERO_THRESHOLD) for a in self.couplings_sf[1:])


class FlatGarkTableau(BaseModel):
    """Single two-partition GARK tableau, fast stages first.

    With ``telescoped`` the fast stages form M equal micro-steps of size H/M; otherwise
    M only records how the fast part was built (e.g. inner steps of an MIS method)
    and the fast weights already refer to the macro-step.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A_ff: Array
    A_fs: Array
    A_sf: Array
    A_ss: Array
    b_f: Array
    b_s: Array
    c_f: Array
    c_s: Array
    M: int = Field(default=1, ge=1)
    telescoped: bool = True
    name: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _derive_c(cls, data: Any) -> Any:
        return _with_row_sums(_with_row_sums(data, "A_ff", "c_f"), "A_ss", "c_s")

    @model_validator(mode="after")
    def _check_shapes(self) -> "FlatGarkTableau":
        nf, ns = self.b_f.shape[0], self.b_s.shape[0]
        expected = {
            "A_ff": (nf, nf), "A_fs": (nf, ns), "A_sf": (ns, nf), "A_ss": (ns, ns),
            "c_f": (nf,), "c_s": (ns,),
        }
        for key, shape in expected.items():
            if getattr(self, key).shape != shape:
                raise StructuralError(f"{key} has shape {getattr(self, key).shape}, expected {shape}")
        return self

    @property
    def n_fast(self) -> int:
        return int(self.b_f.shape[0])

    @property
    def n_slow(self) -> int:
        return int(self.b_s.shape[0])

    @property
    def step_ratio(self) -> int:
        """Ratio of macro-step to fast step used to scale fast columns."""
        return self.M if self.telescoped else 1

    def full_matrix(self) -> np.ndarray:
        """Stage matrix [[A_ff, A_fs], [A_sf, A_ss]]."""
        return np.block([[self.A_ff, self.A_fs], [self.A_sf, self.A_ss]])

    def weights(self) -> np.ndarray:
        return np.concatenate([self.b_f, self.b_s])

    def abscissae(self) -> np.ndarray:
        return np.concatenate([self.c_f, self.c_s])


class Finding(BaseModel):
    """One validation finding."""
    severity: Severity
    code: str
    message: str
    residual: Optional[float] = None


class ValidationReport(BaseModel):
    """Outcome of tableau validation."""
    findings: List[Finding] = Field(default_factory=list)

    @computed_field
    @property
    def ok(self) -> bool:
        return not any(f.severity == Severity.ERROR for f in self.findings)
