"""Algebraic stability: P-matrix assembly, PSD verdicts and conditional stability."""

import logging
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import eigvalsh

from ..config import AM_R_MAX, BISECTION_ITERS, DECOUPLING_TOL, PSD_TOL
from ..errors import DomainError
from ..models import FlatGarkTableau, MrGarkScheme, Partitioning, RkTableau, StabilityReport
from .tableau import flatten

logger = logging.getLogger(__name__)

Scheme = Union[MrGarkScheme, FlatGarkTableau]


def as_flat(target: Scheme) -> FlatGarkTableau:
    return flatten(target) if isinstance(target, MrGarkScheme) else target


def base_p_matrix(t: RkTableau) -> np.ndarray:
    """AᵀB + BA - bbᵀ of a single method."""
    BA = t.b[:, None] * t.A
    return BA + BA.T - np.outer(t.b, t.b)


def p_blocks(flat: FlatGarkTableau) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P_ff, P_fs, P_ss) with P_fs = A_fsᵀB_f + B_sA_sf - b_s b_fᵀ; P_sf is P_fsᵀ."""
    b_f, b_s = flat.b_f, flat.b_s
    BA_ff = b_f[:, None] * flat.A_ff
    BA_ss = b_s[:, None] * flat.A_ss
    P_ff = BA_ff + BA_ff.T - np.outer(b_f, b_f)
    P_ss = BA_ss + BA_ss.T - np.outer(b_s, b_s)
    P_fs = flat.A_fs.T * b_f[None, :] + b_s[:, None] * flat.A_sf - np.outer(b_s, b_f)
    return P_ff, P_fs, P_ss


def assemble_p(P_ff: np.ndarray, P_fs: np.ndarray, P_ss: np.ndarray) -> np.ndarray:
    return np.block([[P_ff, P_fs.T], [P_fs, P_ss]])


def min_eigenvalue(P: np.ndarray) -> float:
    if P.size == 0:
        return 0.0
    return float(eigvalsh((P + P.T) / 2)[0])


def is_psd(P: np.ndarray, tol: float = PSD_TOL) -> Tuple[bool, float]:
    """PSD test with threshold -tol·(1 + ‖P‖∞)."""
    lam = min_eigenvalue(P)
    scale = 1.0 + (float(np.max(np.sum(np.abs(P), axis=1))) if P.size else 0.0)
    return lam >= -tol * scale, lam


def is_algebraically_stable(target: Scheme, tol: float = PSD_TOL) -> Tuple[bool, float]:
    """(verdict, smallest eigenvalue of the full symmetric P)."""
    return is_psd(assemble_p(*p_blocks(as_flat(target))), tol)


def is_stability_decoupled(target: Scheme, tol: float = DECOUPLING_TOL) -> bool:
    _, P_fs, _ = p_blocks(as_flat(target))
    return bool(np.max(np.abs(P_fs), initial=0.0) <= tol)


def _shifted(flat: FlatGarkTableau, blocks, r: float) -> np.ndarray:
    P_ff, P_fs, P_ss = blocks
    return assemble_p(
        P_ff + r * flat.step_ratio * np.diag(flat.b_f),
        P_fs,
        P_ss + r * np.diag(flat.b_s),
    )


def conditional_stability_weight(
    target: Scheme,
    r_max: float = AM_R_MAX,
    tol: float = PSD_TOL,
) -> Optional[float]:
    """Smallest r in [0, r_max] making the weight-shifted P positive semidefinite.

    Returns None when no such r exists in the interval.
    """
    flat = as_flat(target)
    if np.any(flat.weights() < 0):
        logger.warning("Negative weights: the weight shift cannot restore definiteness")
        return None
    blocks = p_blocks(flat)

    if is_psd(_shifted(flat, blocks, 0.0), tol)[0]:
        return 0.0
    if not is_psd(_shifted(flat, blocks, r_max), tol)[0]:
        logger.info("Shifted P is indefinite at r_max=%g", r_max)
        return None

    lo, hi = 0.0, r_max
    for _ in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        if is_psd(_shifted(flat, blocks, mid), tol)[0]:
            hi = mid
        else:
            lo = mid
    logger.debug("Conditional stability weight bracket [%g, %g]", lo, hi)
    return hi


def conditional_step_bound(r: float, mu: float) -> Optional[float]:
    """Macro-step restriction H <= -2μ/r; None means unrestricted."""
    if mu >= 0:
        raise DomainError(f"coercivity constant must be negative, got {mu}")
    if r == 0:
        return None
    return -2.0 * mu / r


def stability_report(
    target: Scheme,
    partitioning: Partitioning = Partitioning.ADDITIVE,
    mu: Optional[float] = None,
    r_max: float = AM_R_MAX,
) -> StabilityReport:
    """Full stability analysis.

    With component partitioning the mixed block does not enter the verdict.
    """
    flat = as_flat(target)
    P_ff, P_fs, P_ss = p_blocks(flat)
    decoupled = is_stability_decoupled(flat)

    if isinstance(target, MrGarkScheme):
        bases_stable = is_psd(base_p_matrix(target.fast))[0] and is_psd(base_p_matrix(target.slow))[0]
    else:
        bases_stable = is_psd(P_ff)[0] and is_psd(P_ss)[0]

    if Partitioning(partitioning) is Partitioning.COMPONENT:
        (ok_f, lam_f), (ok_s, lam_s) = is_psd(P_ff), is_psd(P_ss)
        stable, lam = ok_f and ok_s, min(lam_f, lam_s)
    else:
        stable, lam = is_psd(assemble_p(P_ff, P_fs, P_ss))

    r = 0.0 if stable else conditional_stability_weight(flat, r_max)
    bound = None
    if mu is not None and r is not None:
        bound = conditional_step_bound(r, mu)

    return StabilityReport(
        P_ff=P_ff,
        P_fs=P_fs,
        P_ss=P_ss,
        partitioning=partitioning,
        algebraically_stable=stable,
        stability_decoupled=decoupled,
        min_eigenvalue=lam,
        bases_stable=bases_stable,
        conditional_r=r,
        step_bound=bound,
    )
