"""Analysis report models."""

from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from .fields import Array


class Partition(str, Enum):
    """Which part of the scheme an order condition constrains."""
    SLOW = "slow"
    FAST = "fast"
    COUPLING = "coupling"


class Partitioning(str, Enum):
    """How the right-hand side is split."""
    ADDITIVE = "additive"
    COMPONENT = "component"


class ConditionResidual(BaseModel):
    """One evaluated order condition."""
    id: str
    order: int
    partition: Partition
    lhs: float
    rhs: float
    residual: float
    alias_of: Optional[str] = None
    diagnostic: bool = False


class OrderReport(BaseModel):
    """Residuals of a family of order conditions and the resulting order."""
    residuals: List[ConditionResidual] = Field(default_factory=list)
    classified_order: int = 0
    table_source: str
    tolerance: float

    def get(self, condition_id: str) -> ConditionResidual:
        for item in self.residuals:
            if item.id == condition_id:
                return item
        raise KeyError(condition_id)

    def max_residual(self, up_to: int = 3) -> float:
        values = [r.residual for r in self.residuals if r.order <= up_to and not r.diagnostic]
        return max(values, default=0.0)


class StabilityReport(BaseModel):
    """Algebraic stability verdicts for one scheme."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    P_ff: Array
    P_fs: Array
    P_ss: Array
    partitioning: Partitioning = Partitioning.ADDITIVE
    algebraically_stable: bool
    stability_decoupled: bool
    min_eigenvalue: float
    bases_stable: Optional[bool] = None
    conditional_r: Optional[float] = None
    step_bound: Optional[float] = None


class MonotonicityReport(BaseModel):
    """Absolute monotonicity radius and incidence verdicts."""
    radius: float
    saturated: bool = False
    am_checked_at: List[Tuple[float, bool]] = Field(default_factory=list)
    incidence_verdicts: Dict[str, bool] = Field(default_factory=dict)
    step_bound: Optional[float] = None


class CheckReport(BaseModel):
    """Everything `check` computes for one scheme."""
    scheme: str
    M: int
    structure_tag: Optional[str] = None
    classified_order: int
    expected_order: Optional[int] = None
    internal_consistency: Optional[Tuple[float, float]] = None
    internally_consistent: Optional[bool] = None
    order: List[OrderReport] = Field(default_factory=list)
    stability: Optional[StabilityReport] = None
    monotonicity: Optional[MonotonicityReport] = None
    notes: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.expected_order is None or self.classified_order >= self.expected_order


class ConvergenceStudy(BaseModel):
    """Final-time errors over a list of macro-steps."""
    scheme: str
    problem: str
    M: int
    H: List[float]
    errors: List[float]
    slope: float
