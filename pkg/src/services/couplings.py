"""Constructors for coupling matrices of multirate GARK schemes."""

import logging
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..config import ETA_TOL, NONZERO_THRESHOLD, ROW_SUM_TOL
from ..errors import DomainError, InvalidEta, InvalidOuter, SingularWeights, StructuralError
from ..models import EtaFamily, FlatGarkTableau, MisPair, MrGarkScheme, Normalization, RkTableau
from ..models.fields import to_array

logger = logging.getLogger(__name__)


def _positive_weights(b: np.ndarray, label: str) -> np.ndarray:
    if np.any(b <= 0):
        raise SingularWeights(f"{label} weights must be positive, got {b.tolist()}")
    return b


def stability_decoupled_fs(
    fast: RkTableau,
    slow: RkTableau,
    couplings_sf: Sequence[np.ndarray],
) -> List[np.ndarray]:
    """Fast-slow couplings that zero the mixed P block for the given slow-fast couplings.

    A^{fs,λ} = B_f^{-1} (b_f b_sᵀ - A^{sf,λ}ᵀ B_s).
    """
    b_f = _positive_weights(fast.b, "fast")
    B_s = np.diag(slow.b)
    target = np.outer(b_f, slow.b)
    result = []
    for lam, a_sf in enumerate(couplings_sf, start=1):
        a_sf = to_array(a_sf)
        if a_sf.shape != (slow.s, fast.s):
            raise StructuralError(f"A_sf[{lam}] has shape {a_sf.shape}, expected {(slow.s, fast.s)}")
        result.append((target - a_sf.T @ B_s) / b_f[:, None])
    return result


def coupling_condition_residual(
    fast: RkTableau,
    slow: RkTableau,
    a_fs: np.ndarray,
    a_sf: np.ndarray,
) -> float:
    """max-norm of A^{fs}ᵀB_f + B_s A^{sf} - b_s b_fᵀ."""
    P = a_fs.T * fast.b[None, :] + slow.b[:, None] * a_sf - np.outer(slow.b, fast.b)
    return float(np.max(np.abs(P)))


def kr_scheme(
    fast: RkTableau,
    slow: RkTableau,
    A_fs1,
    A_sf1,
    eta: EtaFamily,
    M: int,
    name: Optional[str] = None,
) -> MrGarkScheme:
    """Scheme coupled to the slow stages only through the first micro-step.

    couplings_fs[λ] = A_fs1 + F(λ-1)/M and A^{sf,λ} = 0 for λ ≥ 2.
    """
    A_fs1, A_sf1 = to_array(A_fs1), to_array(A_sf1)
    if A_fs1.shape != (fast.s, slow.s) or A_sf1.shape != (slow.s, fast.s):
        raise StructuralError(
            f"first couplings have shapes {A_fs1.shape} and {A_sf1.shape}, "
            f"expected {(fast.s, slow.s)} and {(slow.s, fast.s)}"
        )
    if eta.s_cols != slow.s:
        raise StructuralError(f"eta has {eta.s_cols} columns, slow method has {slow.s} stages")

    violation = eta.sum_rule_residual(M)
    if violation > ETA_TOL:
        raise InvalidEta(f"sum_j eta_j(lambda) differs from lambda by {violation:.3e}", residual=violation)

    consistency = float(np.max(np.abs(A_fs1.sum(axis=1) - fast.A.sum(axis=1) / M)))
    if consistency > ROW_SUM_TOL:
        logger.info("First fast-slow coupling is not internally consistent (residual %.3e)", consistency)

    couplings_fs = [A_fs1 + eta.F(lam - 1, fast.s) / M for lam in range(1, M + 1)]
    couplings_sf = [A_sf1] + [np.zeros((slow.s, fast.s)) for _ in range(M - 1)]
    return MrGarkScheme(
        fast=fast,
        slow=slow,
        M=M,
        couplings_fs=couplings_fs,
        couplings_sf=couplings_sf,
        eta=eta,
        name=name,
    )


def mrk_scheme(
    fast: RkTableau,
    slow: RkTableau,
    At_fs,
    At_sf,
    eta: EtaFamily,
    M: int,
    name: Optional[str] = None,
) -> MrGarkScheme:
    """kr_scheme for coupling matrices in the micro-step normalization.

    At_fs = M·A^{fs,1} (slow stages seen on the micro-step scale) and
    At_sf = A^{sf,1}/M.
    """
    return kr_scheme(fast, slow, to_array(At_fs) / M, M * to_array(At_sf), eta, M, name=name)


def dense_output_fs(
    slow: RkTableau,
    d: Callable[[int, float], float],
    fast_c,
    M: int,
) -> List[np.ndarray]:
    """a^{fs,λ}_{ij} = d_j((λ-1+c_i)/M)."""
    fast_c = to_array(fast_c)
    result = []
    for lam in range(1, M + 1):
        theta = (lam - 1 + fast_c) / M
        if np.any(theta < -NONZERO_THRESHOLD) or np.any(theta > 1 + NONZERO_THRESHOLD):
            raise DomainError(f"dense output evaluated outside [0, 1] at micro-step {lam}", theta=theta.tolist())
        result.append(np.array([[float(d(j, th)) for j in range(slow.s)] for th in theta]))
    return result


def additive_multirate(
    fast_A,
    slow_A,
    slow_A_lambda: Sequence,
    b_f,
    b_s,
    M: int,
    normalization: Normalization = Normalization.GARK,
    name: Optional[str] = None,
) -> MrGarkScheme:
    """Multirate additive Runge-Kutta pair.

    The fast stages reuse the slow matrix for their slow coupling and the slow
    stages couple only to the first micro-step through the fast matrix.
    With ``normalization="mrk"`` the inputs are on the micro-step scale and are
    converted here.
    """
    fast_A, slow_A = to_array(fast_A), to_array(slow_A)
    b_f, b_s = to_array(b_f), to_array(b_s)
    extra = [to_array(a) for a in slow_A_lambda]
    s = b_f.shape[0]

    if len(extra) != M - 1:
        raise StructuralError(f"expected {M - 1} matrices for micro-steps 2..M, got {len(extra)}")
    for label, mat in [("fast_A", fast_A), ("slow_A", slow_A)] + [(f"slow_A[{k}]", a) for k, a in enumerate(extra, 2)]:
        if mat.shape != (s, s):
            raise StructuralError(f"{label} has shape {mat.shape}, expected {(s, s)}")
    if b_s.shape != (s,):
        raise StructuralError(f"b_s has shape {b_s.shape}, expected {(s,)}")

    normalization = Normalization(normalization)
    if normalization is Normalization.MRK:
        couplings_fs = [slow_A / M] + [a / M for a in extra]
        first_sf = M * fast_A
    else:
        couplings_fs = [slow_A] + extra
        first_sf = fast_A

    return MrGarkScheme(
        fast=RkTableau(A=fast_A, b=b_f),
        slow=RkTableau(A=slow_A, b=b_s),
        M=M,
        couplings_fs=couplings_fs,
        couplings_sf=[first_sf] + [np.zeros((s, s)) for _ in range(M - 1)],
        name=name,
    )


def single_rate(base: RkTableau, name: Optional[str] = None) -> MrGarkScheme:
    """The base method applied to both partitions with M = 1."""
    return MrGarkScheme(
        fast=base,
        slow=base,
        M=1,
        couplings_fs=[base.A],
        couplings_sf=[base.A],
        name=name or base.name,
    )


def _check_outer(outer: RkTableau) -> None:
    c = outer.c
    if not outer.is_explicit:
        raise InvalidOuter("outer method must be explicit")
    if abs(c[0]) > NONZERO_THRESHOLD:
        raise InvalidOuter(f"outer abscissa c_1 must be 0, got {c[0]}")
    if np.any(np.diff(c) <= 0):
        raise InvalidOuter(f"outer abscissae must be strictly increasing, got {c.tolist()}")
    if c[-1] >= 1:
        raise InvalidOuter(f"last outer abscissa must be below 1, got {c[-1]}")


def mis_to_gark(p: MisPair, tol: float = ROW_SUM_TOL, inner_steps: int = 1) -> FlatGarkTableau:
    """Flattened GARK tableau of one MIS step with one inner step per outer interval.

    Fast block k integrates from slow stage k over width c_{k+1} - c_k; the
    trailing block covers [c_s, 1] with the forcing taken from b. ``inner_steps``
    is the number of steps composed into the inner method and becomes M.
    """
    outer, inner = p.outer, p.inner
    _check_outer(outer)

    Ao, bo, co = outer.A, outer.b, outer.c
    Ai, bi, ci = inner.A, inner.b, inner.c
    s, q = outer.s, inner.s
    widths = np.append(np.diff(co), 1.0 - co[-1])

    A_ff = np.zeros((s * q, s * q))
    A_fs = np.zeros((s * q, s))
    A_sf = np.zeros((s, s * q))
    for k in range(s):
        rows = slice(k * q, (k + 1) * q)
        A_ff[rows, rows] = widths[k] * Ai
        for m in range(k):
            A_ff[rows, m * q:(m + 1) * q] = widths[m] * np.outer(np.ones(q), bi)
        start = Ao[k]
        end = Ao[k + 1] if k + 1 < s else bo
        A_fs[rows] = np.outer(np.ones(q), start) + np.outer(ci, end - start)
        for j in range(k + 1, s):
            A_sf[j, rows] = widths[k] * bi

    flat = FlatGarkTableau(
        A_ff=A_ff,
        A_fs=A_fs,
        A_sf=A_sf,
        A_ss=Ao,
        b_f=np.concatenate([w * bi for w in widths]),
        b_s=bo,
        M=inner_steps,
        telescoped=False,
        name=f"mis[{outer.name or 'outer'}/{inner.name or 'inner'}]",
    )

    # c^{sf} = c^{ss} = c^o and c^{ff} = c^{fs}
    c_stacked = np.concatenate([co[k] + widths[k] * ci for k in range(s)])
    deviations = {
        "c_sf": A_sf.sum(axis=1) - co,
        "c_ss": Ao.sum(axis=1) - co,
        "c_ff": A_ff.sum(axis=1) - c_stacked,
        "c_fs": A_fs.sum(axis=1) - c_stacked,
    }
    worst = max(deviations, key=lambda key: np.max(np.abs(deviations[key])))
    if np.max(np.abs(deviations[worst])) > tol:
        raise StructuralError(
            f"MIS abscissa identity {worst} violated by {np.max(np.abs(deviations[worst])):.3e}"
        )
    return flat
