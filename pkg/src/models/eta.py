"""Eta families defining the F(lambda) coupling increments."""

from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class EtaFamily(BaseModel):
    """Scalar functions eta_j(lambda); F(lambda) has every row equal to eta(lambda)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    s_cols: int = Field(ge=1)
    eval: Callable[[int, int], float]

    def row(self, lam: int) -> np.ndarray:
        return np.array([float(self.eval(j, lam)) for j in range(self.s_cols)])

    def F(self, lam: int, rows: int) -> np.ndarray:
        return np.tile(self.row(lam), (rows, 1))

    def sum_rule_residual(self, M: int) -> float:
        """max over lambda = 0..M-1 of |sum_j eta_j(lambda) - lambda|."""
        return max(abs(self.row(lam).sum() - lam) for lam in range(M))

    @classmethod
    def from_weights(cls, weights) -> "EtaFamily":
        """Family eta_j(lambda) = weights[j] * lambda."""
        w = [float(x) for x in weights]
        return cls(s_cols=len(w), eval=lambda j, lam: w[j] * lam)
