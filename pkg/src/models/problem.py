"""Problem, solver and trajectory models."""

from enum import Enum
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import NEWTON_MAX_ITER, NEWTON_TOL
from ..errors import InvalidParameter
from .fields import Array

Rhs = Callable[[float, np.ndarray], np.ndarray]
Jacobian = Callable[[float, np.ndarray], np.ndarray]


class JacobianMode(str, Enum):
    """Source of the Newton Jacobian."""
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite-difference"


class ProblemMetadata(BaseModel):
    """Dissipativity and monotonicity constants of a partitioned problem."""
    mu: Optional[float] = None
    nu_slow: Optional[float] = None
    nu_fast: Optional[float] = None
    rho: Optional[float] = None
    rho_fast: Optional[float] = None
    norm: float = 2.0

    def certified_rho(self, M: int = 1) -> Optional[float]:
        """Forward Euler radius valid for the slow step H and the fast step H/M."""
        if self.rho is None:
            return None
        if self.rho_fast is None:
            return self.rho
        return min(self.rho, M * self.rho_fast)


class PartitionedIvp(BaseModel):
    """y' = f_slow(t, y) + f_fast(t, y), y(t0) = y0."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str = "problem"
    dim: int = Field(ge=1)
    f_slow: Rhs
    f_fast: Rhs
    y0: Array
    t0: float = 0.0
    exact: Optional[Callable[[float], np.ndarray]] = None
    jac_slow: Optional[Jacobian] = None
    jac_fast: Optional[Jacobian] = None
    metadata: ProblemMetadata = Field(default_factory=ProblemMetadata)

    @model_validator(mode="after")
    def _check_dim(self) -> "PartitionedIvp":
        if self.y0.shape != (self.dim,):
            raise InvalidParameter(f"y0 has shape {self.y0.shape}, expected ({self.dim},)")
        return self

    @property
    def has_jacobians(self) -> bool:
        return self.jac_slow is not None and self.jac_fast is not None


class SolverConfig(BaseModel):
    """Newton settings for implicit stages."""
    newton_tol: float = Field(default=NEWTON_TOL, gt=0)
    newton_max_iter: int = Field(default=NEWTON_MAX_ITER, ge=1)
    jacobian_mode: JacobianMode = JacobianMode.ANALYTIC
    fd_epsilon: Optional[float] = None


class StepStats(BaseModel):
    """Work counters."""
    rhs_slow_evals: int = 0
    rhs_fast_evals: int = 0
    newton_iters: int = 0
    newton_solves: int = 0

    def add(self, other: "StepStats") -> None:
        self.rhs_slow_evals += other.rhs_slow_evals
        self.rhs_fast_evals += other.rhs_fast_evals
        self.newton_iters += other.newton_iters
        self.newton_solves += other.newton_solves


class Trajectory(BaseModel):
    """Macro-step solution history."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: List[float]
    states: Array
    micro_states: Optional[Array] = None
    stats: StepStats = Field(default_factory=StepStats)

    @model_validator(mode="after")
    def _check_grid(self) -> "Trajectory":
        if len(self.times) != self.states.shape[0]:
            raise InvalidParameter("times and states differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise InvalidParameter("times must be strictly increasing")
        return self

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]
