"""Order-condition residuals up to order three and empirical convergence order."""

import logging
from itertools import product
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import NONZERO_THRESHOLD, ROW_SUM_TOL, condition_tol
from ..errors import Diverged, InvalidParameter, SingularWeights, Unsupported
from ..models import (
    ConditionResidual,
    FlatGarkTableau,
    MisPair,
    MrGarkScheme,
    OrderReport,
    Partition,
    PartitionedIvp,
    SolverConfig,
)
from .couplings import mis_to_gark

logger = logging.getLogger(__name__)

Scheme = Union[MrGarkScheme, FlatGarkTableau]

MAX_ORDER = 3


def _cond(
    cid: str,
    order: int,
    partition: Partition,
    lhs: float,
    rhs: float,
    alias_of: Optional[str] = None,
    diagnostic: bool = False,
) -> ConditionResidual:
    lhs, rhs = float(lhs), float(rhs)
    return ConditionResidual(
        id=cid, order=order, partition=partition, lhs=lhs, rhs=rhs,
        residual=abs(lhs - rhs), alias_of=alias_of, diagnostic=diagnostic,
    )


def classify(residuals: Sequence[ConditionResidual], tol: Optional[float] = None, up_to: int = MAX_ORDER) -> int:
    """Largest p such that every non-diagnostic condition of order <= p holds."""
    tol = condition_tol() if tol is None else tol
    order = 0
    for p in range(1, min(up_to, MAX_ORDER) + 1):
        if any(r.residual > tol for r in residuals if r.order == p and not r.diagnostic):
            break
        order = p
    return order


def _report(rows: List[ConditionResidual], source: str, up_to: int = MAX_ORDER) -> OrderReport:
    tol = condition_tol()
    rows = [r for r in rows if r.order <= up_to]
    return OrderReport(residuals=rows, classified_order=classify(rows, tol, up_to), table_source=source, tolerance=tol)


def slow_order_residuals(sch: MrGarkScheme, up_to: int = MAX_ORDER) -> OrderReport:
    """Slow-partition conditions of the multirate scheme."""
    M = sch.M
    b, A = sch.slow.b, sch.slow.A
    c = A.sum(axis=1)
    one_s = np.ones(sch.slow.s)
    one_f = np.ones(sch.fast.s)
    c_ff = sch.fast.A.sum(axis=1)
    S1 = sum(a.sum(axis=1) for a in sch.couplings_sf)
    pairs = list(enumerate(zip(sch.couplings_fs, sch.couplings_sf), start=1))

    slow = Partition.SLOW
    rows = [
        _cond("T1.1", 1, slow, b.sum(), 1.0),
        _cond("T1.2", 2, slow, b @ c, 1 / 2),
        _cond("T1.3", 2, slow, b @ S1, M / 2),
        _cond("T1.4", 3, slow, b @ (c * c), 1 / 3),
        _cond("T1.5", 3, slow, b @ (c * S1), M / 3),
        _cond("T1.6", 3, slow, b @ (S1 * c), M / 3),
        _cond("T1.7", 3, slow, b @ (S1 * S1), M**2 / 3),
        _cond("T1.8", 3, slow, b @ A @ c, 1 / 6),
        _cond("T1.9", 3, slow, b @ A @ S1, M / 6),
        _cond("T1.10", 3, slow, sum(b @ a_sf @ a_fs @ one_s for _, (a_fs, a_sf) in pairs), M / 6),
        _cond("T1.11", 3, slow, sum(b @ a_sf @ (c_ff + (lam - 1) * one_f) for lam, (_, a_sf) in pairs), M**2 / 6),
    ]
    return _report(rows, "slow multirate conditions", up_to)


def _nested_microstep_sum(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """sum_{mu=1}^{M-1} sum_{lambda=1}^{mu} v_lambda."""
    M = len(vectors)
    total = np.zeros_like(vectors[0])
    for mu in range(1, M):
        for lam in range(1, mu + 1):
            total = total + vectors[lam - 1]
    return total


def fast_order_residuals(sch: MrGarkScheme, up_to: int = MAX_ORDER) -> OrderReport:
    """Fast-partition conditions of the multirate scheme.

    T2.6 uses (λ-1)·I; the variant that multiplies (λ-1) into A^{fs,λ} is
    reported as the diagnostic T2.6-alt.
    """
    M = sch.M
    b, A = sch.fast.b, sch.fast.A
    c = A.sum(axis=1)
    c_ss = sch.slow.A.sum(axis=1)
    fs1 = [a.sum(axis=1) for a in sch.couplings_fs]
    S1 = sum(fs1)
    Ssf1 = sum(a.sum(axis=1) for a in sch.couplings_sf)
    W1 = sum((lam - 1) * v for lam, v in enumerate(fs1, start=1))
    indexed = list(enumerate(fs1, start=1))

    fast = Partition.FAST
    rows = [
        _cond("T2.1", 1, fast, b.sum(), 1.0),
        _cond("T2.2", 2, fast, b @ c, 1 / 2),
        _cond("T2.3", 2, fast, b @ S1, M / 2),
        _cond("T2.4", 3, fast, b @ (c * c), 1 / 3),
        _cond("T2.5", 3, fast, b @ (c * S1 + W1), M**2 / 3),
        _cond("T2.6", 3, fast, sum(b @ (v * (c + (lam - 1))) for lam, v in indexed), M**2 / 3),
        _cond(
            "T2.6-alt", 3, fast, sum(b @ (v * (c + (lam - 1) * v)) for lam, v in indexed), M**2 / 3,
            diagnostic=True,
        ),
        _cond("T2.7", 3, fast, sum(b @ (v * v) for v in fs1), M / 3),
        _cond("T2.8", 3, fast, b @ A @ c, 1 / 6),
        _cond("T2.9", 3, fast, b @ (A @ S1 + _nested_microstep_sum(fs1)), M**2 / 6),
        _cond("T2.10", 3, fast, sum(b @ a_fs @ Ssf1 for a_fs in sch.couplings_fs), M**2 / 6),
        _cond("T2.11", 3, fast, sum(b @ a_fs @ c_ss for a_fs in sch.couplings_fs), M / 6),
    ]
    return _report(rows, "fast multirate conditions", up_to)


def d_matrices(sch: MrGarkScheme) -> List[np.ndarray]:
    """D^λ = B_f^{-1} A^{sf,λ}ᵀ B_s."""
    b_f = sch.fast.b
    if np.any(np.abs(b_f) <= NONZERO_THRESHOLD):
        raise SingularWeights(f"fast weights must be nonzero, got {b_f.tolist()}")
    return [(a_sf.T * sch.slow.b[None, :]) / b_f[:, None] for a_sf in sch.couplings_sf]


def decoupled_order_residuals(sch: MrGarkScheme) -> OrderReport:
    """Conditions for arbitrary partitioning, with the fast-slow coupling eliminated through D^λ."""
    M = sch.M
    D = d_matrices(sch)
    bf, Aff = sch.fast.b, sch.fast.A
    bs, Ass = sch.slow.b, sch.slow.A
    cf, cs = Aff.sum(axis=1), Ass.sum(axis=1)
    D1 = [d.sum(axis=1) for d in D]
    SD1 = sum(D1)
    Ssf1 = sum(a.sum(axis=1) for a in sch.couplings_sf)
    lamD1 = sum((lam - 1) * v for lam, v in enumerate(D1, start=1))

    f, s = Partition.FAST, Partition.SLOW
    rows = [
        _cond("T3.i", 2, f, bf @ SD1, M / 2, alias_of="T3.viii"),
        _cond("T3.ii", 3, f, bf @ (cf * SD1 + lamD1), M**2 / 6, alias_of="T3.xiv"),
        _cond("T3.iii", 3, f, sum(bf @ (v * v) for v in D1), M / 3, alias_of="T3.xiii"),
        _cond("T3.iv", 3, f, sum(bf @ (v * cf) for v in D1) + bf @ lamD1, M**2 / 6),
        _cond("T3.v", 3, f, bf @ (sum(Aff @ v for v in D1) + _nested_microstep_sum(D1)), M**2 / 3),
        _cond("T3.vi", 3, f, sum(bf @ d @ Ssf1 for d in D), M**2 / 3, alias_of="T3.xi"),
        _cond("T3.vii", 3, f, sum(bf @ d @ cs for d in D), M / 3, alias_of="T3.x"),
        _cond("T3.viii", 2, s, bs @ Ssf1, M / 2),
        _cond("T3.ix", 3, s, bs @ (cs * Ssf1), M / 3),
        _cond("T3.x", 3, s, bs @ (Ssf1 * cs), M / 3),
        _cond("T3.xi", 3, s, bs @ (Ssf1 * Ssf1), M**2 / 3),
        _cond("T3.xii", 3, s, bs @ Ass @ Ssf1, M / 6),
        _cond("T3.xiii", 3, s, sum(bs @ a_sf @ v for a_sf, v in zip(sch.couplings_sf, D1)), M / 3),
        _cond(
            "T3.xiv", 3, s,
            sum(bs @ a_sf @ (cf + (lam - 1)) for lam, a_sf in enumerate(sch.couplings_sf, start=1)),
            M**2 / 6,
        ),
    ]
    return _report(rows, "arbitrary partitioning conditions")


def remaining_order3_residuals(sch: MrGarkScheme) -> Tuple[float, float]:
    """(r_sf, r_fs): the two order-3 coupling conditions left by internal consistency."""
    report = remaining_order3_report(sch)
    return report.get("E2.18").residual, report.get("E2.19").residual


def remaining_order3_report(sch: MrGarkScheme) -> OrderReport:
    """Remaining order-3 conditions plus the internal-consistency residuals they presume."""
    from .tableau import internal_consistency_residuals

    M = sch.M
    cf = sch.fast.A.sum(axis=1)
    cs = sch.slow.A.sum(axis=1)
    lhs_sf = sum(
        sch.slow.b @ a_sf @ (cf + (lam - 1))
        for lam, a_sf in enumerate(sch.couplings_sf, start=1)
    )
    lhs_fs = sch.fast.b @ sum(sch.couplings_fs) @ cs
    res_fast, res_slow = internal_consistency_residuals(sch)

    rows = [
        _cond("consistency.fast", 2, Partition.FAST, res_fast, 0.0, diagnostic=True),
        _cond("consistency.slow", 2, Partition.SLOW, res_slow, 0.0, diagnostic=True),
        _cond("E2.18", 3, Partition.COUPLING, lhs_sf, M**2 / 6),
        _cond("E2.19", 3, Partition.COUPLING, lhs_fs, M / 6),
    ]
    if sch.first_microstep_only:
        first = sch.couplings_fs[0]
        increments = sum(a - first for a in sch.couplings_fs)
        rows.append(_cond(
            "E.first-microstep", 3, Partition.COUPLING,
            sch.fast.b @ (M * first + increments) @ cs, M / 6,
        ))
    if max(res_fast, res_slow) > ROW_SUM_TOL:
        logger.info("Scheme %s is not internally consistent; remaining conditions are not sufficient", sch.name)
    return _report(rows, "remaining order-3 coupling conditions")


def mrk_order_residuals(sch: MrGarkScheme) -> OrderReport:
    """Conditions for schemes coupled through the first micro-step with F(λ)·1 = λ·1.

    Couplings are converted to the micro-step normalization
    Ã_fs = M·A^{fs,1}, Ã_sf = A^{sf,1}/M, F(λ) = M(A^{fs,λ+1} - A^{fs,1}).
    """
    if not sch.first_microstep_only:
        raise Unsupported("slow stages must couple to the first micro-step only")
    M = sch.M
    bf, Aff = sch.fast.b, sch.fast.A
    bs, Ass = sch.slow.b, sch.slow.A
    cf, cs = Aff.sum(axis=1), Ass.sum(axis=1)
    At_fs = M * sch.couplings_fs[0]
    At_sf = sch.couplings_sf[0] / M
    F = [M * (a - sch.couplings_fs[0]) for a in sch.couplings_fs]

    f, s, cpl = Partition.FAST, Partition.SLOW, Partition.COUPLING
    eta_violation = max(float(np.max(np.abs(Fl.sum(axis=1) - lam))) for lam, Fl in enumerate(F))
    microsteps = max(abs(float(bf @ Fl @ cs) - lam * (lam + 1) / (2 * M)) for lam, Fl in enumerate(F))
    rows = [
        _cond("mrk.f1", 1, f, bf.sum(), 1.0),
        _cond("mrk.s1", 1, s, bs.sum(), 1.0),
        _cond("mrk.f2", 2, f, bf @ cf, 1 / 2),
        _cond("mrk.s2", 2, s, bs @ cs, 1 / 2),
        _cond("mrk.fs-rowsum", 2, cpl, np.max(np.abs(At_fs.sum(axis=1) - cf)), 0.0),
        _cond("mrk.sf-rowsum", 2, cpl, np.max(np.abs(At_sf.sum(axis=1) - cs)), 0.0),
        _cond("mrk.eta", 2, cpl, eta_violation, 0.0),
        _cond("mrk.f3a", 3, f, bf @ (cf * cf), 1 / 3),
        _cond("mrk.s3a", 3, s, bs @ (cs * cs), 1 / 3),
        _cond("mrk.f3b", 3, f, bf @ Aff @ cf, 1 / 6),
        _cond("mrk.s3b", 3, s, bs @ Ass @ cs, 1 / 6),
        _cond("mrk.f3c", 3, cpl, bf @ (At_fs + sum(F) / M) @ cs, M / 6),
        _cond("mrk.s3c", 3, cpl, bs @ At_sf @ cf, M / 6),
        _cond("mrk.all-microsteps", 3, f, microsteps, 0.0, diagnostic=True),
    ]
    return _report(rows, "first-micro-step coupling conditions")


def additive_order_residuals(sch: MrGarkScheme) -> OrderReport:
    """Conditions for multirate additive pairs stored in the micro-step normalization.

    Requires A^{sf,1} = M·A^f with A^f = A^{ff}, M·A^{fs,1} = A^{ss} and
    A^{sf,λ} = 0 for λ ≥ 2; F(λ) = M·A^{fs,λ+1} - A^{ss}.
    """
    M = sch.M
    Af, As = sch.fast.A, sch.slow.A
    form = max(
        float(np.max(np.abs(sch.couplings_sf[0] / M - Af))),
        float(np.max(np.abs(M * sch.couplings_fs[0] - As))),
    )
    if not sch.first_microstep_only or form > ROW_SUM_TOL:
        raise Unsupported("scheme is not a multirate additive pair in micro-step normalization")

    bf, bs = sch.fast.b, sch.slow.b
    c = Af.sum(axis=1)
    F = [M * a - As for a in sch.couplings_fs]
    eta_violation = max(float(np.max(np.abs(Fl.sum(axis=1) - lam))) for lam, Fl in enumerate(F))

    f, s, cpl = Partition.FAST, Partition.SLOW, Partition.COUPLING
    rows = [
        _cond("additive.s1", 1, s, bs.sum(), 1.0),
        _cond("additive.f1", 1, f, bf.sum(), 1.0),
        _cond("additive.c", 2, cpl, np.max(np.abs(As.sum(axis=1) - c)), 0.0),
        _cond("additive.eta", 2, cpl, eta_violation, 0.0),
        _cond("additive.s2", 2, s, bs @ c, 1 / 2),
        _cond("additive.f2", 2, f, bf @ c, 1 / 2),
        _cond("additive.s3a", 3, s, bs @ (c * c), 1 / 3),
        _cond("additive.f3a", 3, f, bf @ (c * c), 1 / 3),
        _cond("additive.s3b", 3, s, bs @ As @ c, 1 / 6),
        _cond("additive.f3b", 3, f, bf @ Af @ c, 1 / 6),
        _cond("additive.s3c", 3, cpl, bs @ Af @ c, M / 6),
        _cond("additive.f3c", 3, cpl, bf @ (As + sum(F) / M) @ c, M / 6),
        _cond("additive.Fc", 3, cpl, bf @ sum(F) @ c, 0.0, diagnostic=True),
    ]
    return _report(rows, "multirate additive conditions")


def flat_order_residuals(flat: FlatGarkTableau, up_to: int = MAX_ORDER) -> OrderReport:
    """Two-partition GARK conditions on a flattened tableau (macro-step units)."""
    b = {"f": flat.b_f, "s": flat.b_s}
    A = {("f", "f"): flat.A_ff, ("f", "s"): flat.A_fs, ("s", "f"): flat.A_sf, ("s", "s"): flat.A_ss}
    c = {key: mat.sum(axis=1) for key, mat in A.items()}

    def tag(*labels: str) -> Partition:
        if all(x == "f" for x in labels):
            return Partition.FAST
        if all(x == "s" for x in labels):
            return Partition.SLOW
        return Partition.COUPLING

    rows = [_cond(f"G.1.{q}", 1, tag(q), b[q].sum(), 1.0) for q in "fs"]
    rows += [_cond(f"G.2.{q}{m}", 2, tag(q, m), b[q] @ c[q, m], 1 / 2) for q, m in product("fs", repeat=2)]
    for q, m, l in product("fs", repeat=3):
        if m <= l:
            rows.append(_cond(f"G.3a.{q}{m}{l}", 3, tag(q, m, l), b[q] @ (c[q, m] * c[q, l]), 1 / 3))
    for q, m, l in product("fs", repeat=3):
        rows.append(_cond(f"G.3b.{q}{m}{l}", 3, tag(q, m, l), b[q] @ A[q, m] @ c[m, l], 1 / 6))
    return _report(rows, "two-partition GARK conditions", up_to)


def order_reports(target: Scheme, up_to: int = MAX_ORDER) -> List[OrderReport]:
    """Reports used to classify a scheme: slow and fast tables, or the generic table for flat tableaus."""
    if isinstance(target, FlatGarkTableau):
        return [flat_order_residuals(target, up_to)]
    return [slow_order_residuals(target, up_to), fast_order_residuals(target, up_to)]


def classified_order(target: Scheme, up_to: int = MAX_ORDER) -> int:
    return min(r.classified_order for r in order_reports(target, up_to))


def mis_order3_lhs(p: MisPair) -> float:
    Ao, co = p.outer.A, p.outer.c
    Ac = Ao @ co
    lhs = sum((co[i] - co[i - 1]) * (Ac[i] + Ac[i - 1]) for i in range(1, p.outer.s))
    return float(lhs + (1.0 - co[-1]) * (0.5 + Ac[-1]))


def mis_order3_residual(p: MisPair) -> float:
    """Residual of the single extra order-3 condition of an MIS scheme with exact inner integration."""
    return abs(mis_order3_lhs(p) - 1 / 3)


def mis_order_report(p: MisPair) -> OrderReport:
    """Generic conditions of the flattened MIS tableau together with MIS.3."""
    report = flat_order_residuals(mis_to_gark(p))
    rows = report.residuals + [_cond("MIS.3", 3, Partition.COUPLING, mis_order3_lhs(p), 1 / 3, diagnostic=True)]
    return _report(rows, "MIS conditions")


def observed_order(
    target: Scheme,
    ivp: PartitionedIvp,
    H_list: Sequence[float],
    t_end: float,
    cfg: Optional[SolverConfig] = None,
) -> Tuple[float, List[float]]:
    """Least-squares slope of log(final error) against log(H)."""
    from .integrator import integrate

    if len(H_list) < 3:
        raise InvalidParameter(f"need at least 3 step sizes, got {len(H_list)}")
    cfg = cfg or SolverConfig()

    if ivp.exact is not None:
        reference = np.asarray(ivp.exact(t_end), dtype=float)
    else:
        H_ref = min(H_list) / 8
        logger.info("No exact solution for %s, computing reference with H=%g", ivp.name, H_ref)
        reference = integrate(target, ivp, t_end, H_ref, cfg).final

    errors = []
    for H in H_list:
        final = integrate(target, ivp, t_end, H, cfg).final
        if not np.all(np.isfinite(final)):
            raise Diverged(f"non-finite solution at H={H}", H=H)
        errors.append(float(np.max(np.abs(final - reference))))
        logger.debug("H=%g error=%.3e", H, errors[-1])

    logs = np.log(np.maximum(errors, np.finfo(float).tiny))
    slope = float(np.polyfit(np.log(np.asarray(H_list, dtype=float)), logs, 1)[0])
    return slope, errors
