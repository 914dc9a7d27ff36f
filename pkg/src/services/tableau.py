"""Tableau validation, flattening and stage dependency analysis."""

import logging
from graphlib import TopologicalSorter
from typing import List, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..config import NONZERO_THRESHOLD, ROW_SUM_TOL
from ..errors import InvalidParameter, StructuralError
from ..models import (
    Finding,
    FlatGarkTableau,
    MrGarkScheme,
    RkTableau,
    Severity,
    StructureTag,
    ValidationReport,
)

logger = logging.getLogger(__name__)


def validate_rk(t: RkTableau, tol: float = ROW_SUM_TOL) -> ValidationReport:
    """Check shapes and the row-sum condition c = A·1."""
    findings: List[Finding] = []
    s = t.b.shape[0] if t.b.ndim == 1 else 0

    if s < 1:
        findings.append(Finding(severity=Severity.ERROR, code="stages", message="b must be a non-empty vector"))
    if t.A.shape != (s, s):
        findings.append(Finding(
            severity=Severity.ERROR, code="shape-A",
            message=f"A has shape {t.A.shape}, expected {(s, s)}",
        ))
    if t.c.shape != (s,):
        findings.append(Finding(
            severity=Severity.ERROR, code="shape-c",
            message=f"c has shape {t.c.shape}, expected {(s,)}",
        ))
    if findings:
        return ValidationReport(findings=findings)

    residual = float(np.max(np.abs(t.A.sum(axis=1) - t.c)))
    if residual > tol:
        findings.append(Finding(
            severity=Severity.ERROR, code="row-sum",
            message=f"max |A·1 - c| = {residual:.3e} exceeds {tol:.1e}", residual=residual,
        ))
    else:
        findings.append(Finding(
            severity=Severity.INFO, code="row-sum", message="c equals the row sums of A", residual=residual,
        ))

    weight_sum = float(t.b.sum())
    if abs(weight_sum - 1.0) > tol:
        findings.append(Finding(
            severity=Severity.WARNING, code="weights",
            message=f"weights sum to {weight_sum:.6g}, the method is not consistent",
            residual=abs(weight_sum - 1.0),
        ))
    return ValidationReport(findings=findings)


def _telescope(A: np.ndarray, b: np.ndarray, M: int) -> Tuple[np.ndarray, np.ndarray]:
    """Stage matrix and weights of M consecutive steps of size 1/M."""
    s = b.shape[0]
    lower = np.tril(np.ones((M, M)), -1)
    big_A = (np.kron(np.eye(M), A) + np.kron(lower, np.outer(np.ones(s), b))) / M
    return big_A, np.tile(b, M) / M


def flatten(sch: MrGarkScheme) -> FlatGarkTableau:
    """Assemble the single two-partition GARK tableau of one macro-step, fast stages first."""
    M = sch.M
    A_ff, b_f = _telescope(sch.fast.A, sch.fast.b, M)
    A_fs = np.vstack(sch.couplings_fs)
    A_sf = np.hstack(sch.couplings_sf) / M
    return FlatGarkTableau(
        A_ff=A_ff,
        A_fs=A_fs,
        A_sf=A_sf,
        A_ss=sch.slow.A,
        b_f=b_f,
        b_s=sch.slow.b,
        c_f=A_ff.sum(axis=1),
        c_s=sch.slow.A.sum(axis=1),
        M=M,
        name=sch.name,
    )


def unflatten(flat: FlatGarkTableau, M: int, tol: float = ROW_SUM_TOL) -> MrGarkScheme:
    """Recover the multirate scheme from a flattened tableau built with ratio M."""
    if M < 1 or flat.n_fast % M:
        raise StructuralError(f"{flat.n_fast} fast stages cannot be split into {M} micro-steps")
    sf = flat.n_fast // M
    rows = [slice(lam * sf, (lam + 1) * sf) for lam in range(M)]

    fast = RkTableau(A=M * flat.A_ff[rows[0], rows[0]], b=M * flat.b_f[rows[0]])
    slow = RkTableau(A=flat.A_ss, b=flat.b_s)
    sch = MrGarkScheme(
        fast=fast,
        slow=slow,
        M=M,
        couplings_fs=[flat.A_fs[r] for r in rows],
        couplings_sf=[M * flat.A_sf[:, r] for r in rows],
        name=flat.name,
    )

    A_ff, b_f = _telescope(fast.A, fast.b, M)
    mismatch = max(np.max(np.abs(A_ff - flat.A_ff)), np.max(np.abs(b_f - flat.b_f)))
    if mismatch > tol:
        raise StructuralError(
            f"fast block is not M={M} steps of one base method (deviation {mismatch:.3e})"
        )
    return sch


def internal_consistency_residuals(sch: MrGarkScheme) -> Tuple[float, float]:
    """Residuals of the fast and slow internal consistency conditions."""
    M = sch.M
    ones_f = np.ones(sch.fast.s)
    base_c = sch.fast.A.sum(axis=1) / M
    res_fast = max(
        float(np.max(np.abs(a_fs.sum(axis=1) - base_c - (lam - 1) / M * ones_f)))
        for lam, a_fs in enumerate(sch.couplings_fs, start=1)
    )
    total_sf = sum(a.sum(axis=1) for a in sch.couplings_sf) / M
    res_slow = float(np.max(np.abs(total_sf - sch.slow.A.sum(axis=1))))
    return res_fast, res_slow


def compose_steps(t: RkTableau, n: int) -> RkTableau:
    """Represent n equal steps of t as one Runge-Kutta method."""
    if n < 1:
        raise InvalidParameter(f"number of steps must be positive, got {n}")
    A, b = _telescope(t.A, t.b, n)
    name = f"{t.name}x{n}" if t.name and n > 1 else t.name
    return RkTableau(A=A, b=b, name=name)


def stage_blocks(A: np.ndarray, threshold: float = NONZERO_THRESHOLD) -> List[np.ndarray]:
    """Strongly connected stage groups of a stage matrix, dependencies first.

    Stage i depends on stage j when |A[i, j]| exceeds the threshold.
    """
    n = A.shape[0]
    if n == 0:
        return []
    adjacency = np.abs(A) > threshold
    n_comp, labels = connected_components(csr_matrix(adjacency), directed=True, connection="strong")

    members = [np.flatnonzero(labels == k) for k in range(n_comp)]
    graph = {k: set() for k in range(n_comp)}
    rows, cols = np.nonzero(adjacency)
    for i, j in zip(rows, cols):
        if labels[i] != labels[j]:
            graph[labels[i]].add(labels[j])

    order = TopologicalSorter(graph).static_order()
    return [members[k] for k in order]


def block_is_explicit(A: np.ndarray, block: np.ndarray, threshold: float = NONZERO_THRESHOLD) -> bool:
    """True for a single stage that does not depend on itself."""
    return block.size == 1 and abs(A[block[0], block[0]]) <= threshold


def classify_structure(sch: MrGarkScheme) -> StructureTag:
    A = flatten(sch).full_matrix()
    blocks = stage_blocks(A)
    if all(block_is_explicit(A, blk) for blk in blocks):
        tag = StructureTag.EXPLICIT
    elif sch.M > 1 and sch.first_microstep_only:
        tag = StructureTag.FIRST_MICROSTEP
    elif len(blocks) > 1:
        tag = StructureTag.STAGGERED
    else:
        tag = StructureTag.FULLY_COUPLED
    logger.debug("Scheme %s: %d stage blocks, structure %s", sch.name, len(blocks), tag.value)
    return tag
