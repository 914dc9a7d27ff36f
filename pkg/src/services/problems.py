"""Partitioned test problems registered by name."""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from ..errors import InvalidParameter, UnknownProblem
from ..models import PartitionedIvp, ProblemMetadata

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]


def _index_mask(index_sets: Tuple[Sequence[int], Sequence[int]], dim: int) -> np.ndarray:
    slow, fast = (set(int(i) for i in s) for s in index_sets)
    if slow & fast:
        raise InvalidParameter(f"index sets overlap in {sorted(slow & fast)}")
    if slow | fast != set(range(dim)):
        missing = sorted(set(range(dim)) - (slow | fast))
        extra = sorted((slow | fast) - set(range(dim)))
        raise InvalidParameter(f"index sets do not cover 0..{dim - 1}: missing {missing}, out of range {extra}")
    mask = np.zeros(dim, dtype=bool)
    mask[sorted(slow)] = True
    return mask


def component_partition(f: Rhs, index_sets: Tuple[Sequence[int], Sequence[int]], dim: int) -> Tuple[Rhs, Rhs]:
    """Split f by components: f_slow keeps the slow entries and zeros the rest, f_fast the converse.

    Index sets are 0-based and must partition range(dim).
    """
    slow_mask = _index_mask(index_sets, dim)

    def f_slow(t: float, y: np.ndarray) -> np.ndarray:
        return np.where(slow_mask, np.asarray(f(t, y), dtype=float), 0.0)

    def f_fast(t: float, y: np.ndarray) -> np.ndarray:
        return np.where(slow_mask, 0.0, np.asarray(f(t, y), dtype=float))

    return f_slow, f_fast


def component_problem(
    f: Rhs,
    index_sets: Tuple[Sequence[int], Sequence[int]],
    y0,
    t0: float = 0.0,
    jac: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
    exact: Optional[Callable[[float], np.ndarray]] = None,
    metadata: Optional[ProblemMetadata] = None,
    name: str = "component",
) -> PartitionedIvp:
    """PartitionedIvp from a component partitioning of f."""
    y0 = np.asarray(y0, dtype=float)
    dim = y0.shape[0]
    f_slow, f_fast = component_partition(f, index_sets, dim)
    jac_slow = jac_fast = None
    if jac is not None:
        rows = _index_mask(index_sets, dim)[:, None]

        def jac_slow(t, y):
            return np.where(rows, jac(t, y), 0.0)

        def jac_fast(t, y):
            return np.where(rows, 0.0, jac(t, y))

    return PartitionedIvp(
        name=name, dim=dim, f_slow=f_slow, f_fast=f_fast, y0=y0, t0=t0, exact=exact,
        jac_slow=jac_slow, jac_fast=jac_fast, metadata=metadata or ProblemMetadata(),
    )


def _linear(name: str, Ls: np.ndarray, Lf: np.ndarray, y0, metadata: Optional[ProblemMetadata] = None) -> PartitionedIvp:
    Ls, Lf = np.atleast_2d(Ls), np.atleast_2d(Lf)
    y0 = np.asarray(y0, dtype=float)
    L = Ls + Lf
    return PartitionedIvp(
        name=name,
        dim=y0.shape[0],
        f_slow=lambda t, y: Ls @ y,
        f_fast=lambda t, y: Lf @ y,
        y0=y0,
        exact=lambda t: expm(L * t) @ y0,
        jac_slow=lambda t, y: Ls,
        jac_fast=lambda t, y: Lf,
        metadata=metadata or ProblemMetadata(),
    )


def linear2() -> PartitionedIvp:
    """Two-component linear system with a slow and a fast matrix."""
    Ls = np.array([[-0.5, 0.2], [0.1, -0.3]])
    Lf = np.array([[-2.0, 1.0], [-1.0, -2.0]])
    return _linear("linear2", Ls, Lf, [1.0, 0.5])


def scalar_split() -> PartitionedIvp:
    """y' = -y - 10 y, y(0) = 1."""
    return _linear("scalar-split", np.array([[-1.0]]), np.array([[-10.0]]), [1.0])


def nonlinear() -> PartitionedIvp:
    """Non-autonomous nonlinear system with analytic Jacobians."""

    def f_slow(t, y):
        return np.array([-0.5 * y[0] + np.cos(t) * y[1], 0.1 * y[0] ** 2 - 0.3 * y[1]])

    def jac_slow(t, y):
        return np.array([[-0.5, np.cos(t)], [0.2 * y[0], -0.3]])

    def f_fast(t, y):
        return np.array([-3.0 * y[0] + 0.5 * y[1] ** 2, -4.0 * y[1] + np.sin(t) * y[0] * y[1]])

    def jac_fast(t, y):
        return np.array([[-3.0, y[1]], [np.sin(t) * y[1], -4.0 + np.sin(t) * y[0]]])

    return PartitionedIvp(
        name="nonlinear", dim=2, f_slow=f_slow, f_fast=f_fast, y0=[1.0, 0.5],
        jac_slow=jac_slow, jac_fast=jac_fast,
    )


def dissipative() -> PartitionedIvp:
    """Rotation with damping as the slow part, cubic damping as the fast part.

    <f_slow(y) - f_slow(z), y - z> = -|y - z|^2 and <f_fast(y) - f_fast(z), y - z> <= -5 |y - z|^2.
    """
    L = np.array([[-1.0, 1.0], [-1.0, -1.0]])

    def f_fast(t, y):
        return -5.0 * y - y ** 3

    def jac_fast(t, y):
        return np.diag(-5.0 - 3.0 * y ** 2)

    return PartitionedIvp(
        name="dissipative", dim=2,
        f_slow=lambda t, y: L @ y, f_fast=f_fast, y0=[1.0, 0.5],
        jac_slow=lambda t, y: L, jac_fast=jac_fast,
        metadata=ProblemMetadata(nu_slow=-1.0, nu_fast=-5.0, mu=-0.5),
    )


def monotone_decay() -> PartitionedIvp:
    """Componentwise decay y1' = -y1 (slow), y2' = -4 y2 (fast), monotone in the max norm."""
    rates = np.array([1.0, 4.0])
    y0 = np.array([1.0, -0.5])
    return component_problem(
        lambda t, y: -rates * y,
        ([0], [1]),
        y0,
        jac=lambda t, y: np.diag(-rates),
        exact=lambda t: np.exp(-rates * t) * y0,
        metadata=ProblemMetadata(rho=2.0, rho_fast=0.5, norm=np.inf),
        name="monotone-decay",
    )


PROBLEMS: Dict[str, Callable[[], PartitionedIvp]] = {
    "linear2": linear2,
    "scalar-split": scalar_split,
    "nonlinear": nonlinear,
    "dissipative": dissipative,
    "monotone-decay": monotone_decay,
}


def get_problem(name: str) -> PartitionedIvp:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise UnknownProblem(f"unknown problem '{name}'", known=sorted(PROBLEMS)) from None
    return factory()


def list_problems() -> List[Tuple[str, str]]:
    """(name, first docstring line) for every registered problem."""
    return [(name, (fn.__doc__ or "").strip().splitlines()[0]) for name, fn in PROBLEMS.items()]
