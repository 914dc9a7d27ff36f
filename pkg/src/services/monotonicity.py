"""Absolute monotonicity: bordered matrices, radius search and incidence conditions."""

import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..config import AM_R_MAX, AM_RADIUS_TOL, NONZERO_THRESHOLD
from ..errors import DomainError, InvalidParameter, SingularResolvent, Unsupported
from ..models import FlatGarkTableau, MonotonicityReport, MrGarkScheme, RkTableau
from ..models.fields import to_array
from .tableau import flatten

logger = logging.getLogger(__name__)

Target = Union[MrGarkScheme, FlatGarkTableau, RkTableau]


def _as_flat(target: Target) -> Union[FlatGarkTableau, RkTableau]:
    return flatten(target) if isinstance(target, MrGarkScheme) else target


def bordered_matrix(target: Target) -> np.ndarray:
    """Stage matrix with the weight row appended and a zero last column."""
    t = _as_flat(target)
    if isinstance(t, RkTableau):
        A, b = t.A, t.b
    else:
        A, b = t.full_matrix(), t.weights()
    n = b.shape[0]
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = A
    out[n, :n] = b
    return out


def _column_scaling(target: Target) -> np.ndarray:
    """diag{M·I, I, 1}, or the identity for a single method."""
    t = _as_flat(target)
    if isinstance(t, RkTableau):
        return np.ones(t.s + 1)
    return np.concatenate([np.full(t.n_fast, float(t.step_ratio)), np.ones(t.n_slow), [1.0]])


def build_ahat(target: Target) -> np.ndarray:
    """Ahat = Atilde · diag{M·I, I, 1}."""
    return bordered_matrix(target) * _column_scaling(target)[None, :]


def monotonicity_coefficients(target: Target, r: float, form: str = "scaled") -> Tuple[np.ndarray, np.ndarray]:
    """alpha(r) and beta(r).

    ``form="scaled"`` works with r·Ahat, ``form="bordered"`` with Atilde·Rtilde,
    Rtilde = diag{M r I, r I, 1}.
    """
    if form == "scaled":
        K = r * build_ahat(target)
    elif form == "bordered":
        scaling = _column_scaling(target) * r
        scaling[-1] = 1.0
        K = bordered_matrix(target) * scaling[None, :]
    else:
        raise InvalidParameter(f"unknown form {form!r}, expected 'scaled' or 'bordered'")

    n = K.shape[0]
    lu, piv = lu_factor(np.eye(n) + K, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) <= np.finfo(float).eps * max(1.0, np.max(pivots)) * n:
        raise SingularResolvent(f"I + r*Ahat is singular at r={r}", r=r)
    alpha = lu_solve((lu, piv), np.ones(n))
    beta = lu_solve((lu, piv), K)
    return alpha, beta


def incidence_closed(target: Target) -> bool:
    """Inc(Ahat²) <= Inc(Ahat), necessary for a positive radius."""
    pattern = _inc(build_ahat(target)).astype(int)
    return _le(pattern @ pattern, pattern)


def _rounding_tol(ahat: np.ndarray, r: float) -> float:
    """Rounding level of the resolvent solve: 10·n·eps·(1 + r·|Ahat|_inf)²."""
    n = ahat.shape[0]
    scale = 1.0 + r * float(np.max(np.abs(ahat).sum(axis=1)))
    return 10 * n * np.finfo(float).eps * scale**2


def is_absolutely_monotonic(target: Target, r: float, tol: Optional[float] = None) -> bool:
    """alpha(r) >= 0, beta(r) >= 0 and Ahat >= 0, entrywise up to the rounding level of the solve."""
    if r < 0:
        raise DomainError(f"r must be non-negative, got {r}")
    ahat = build_ahat(target)
    if np.any(ahat < -NONZERO_THRESHOLD):
        return False
    if r == 0:
        return True
    if not incidence_closed(target):
        return False
    tol = _rounding_tol(ahat, r) if tol is None else tol
    alpha, beta = monotonicity_coefficients(target, r)
    return bool(np.all(alpha >= -tol) and np.all(beta >= -tol))


def _am_or_false(target: Target, r: float) -> bool:
    try:
        return is_absolutely_monotonic(target, r)
    except SingularResolvent:
        logger.debug("Singular resolvent at r=%g", r)
        return False


def am_radius(target: Target, r_max: float = AM_R_MAX, tol: float = AM_RADIUS_TOL) -> float:
    """Radius of absolute monotonicity by bisection on [0, r_max].

    A result equal to r_max means the scheme stayed monotonic on the whole interval.
    """
    if np.any(build_ahat(target) < -NONZERO_THRESHOLD):
        logger.info("Negative coefficients: radius is 0")
        return 0.0
    if not incidence_closed(target):
        logger.info("Inc(Ahat²) exceeds Inc(Ahat): radius is 0")
        return 0.0
    if _am_or_false(target, r_max):
        logger.warning("Absolutely monotonic up to r_max=%g, radius saturated", r_max)
        return float(r_max)

    lo, hi = 0.0, float(r_max)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _am_or_false(target, mid):
            lo = mid
        else:
            hi = mid
    logger.debug("Radius bracket [%g, %g]", lo, hi)
    return lo


def step_bound(radius: float, rho: float) -> float:
    """Monotone macro-step bound H <= R·rho."""
    if rho <= 0:
        raise DomainError(f"forward Euler radius rho must be positive, got {rho}")
    return radius * rho


def _inc(X: np.ndarray) -> np.ndarray:
    return np.abs(X) > NONZERO_THRESHOLD


def _le(X: np.ndarray, Y: np.ndarray) -> bool:
    """Inc(X) <= Inc(Y) entrywise."""
    return bool(np.all(~_inc(X) | _inc(Y)))


def _pattern_product(*mats: np.ndarray) -> np.ndarray:
    out = np.abs(mats[0])
    for m in mats[1:]:
        out = out @ np.abs(m)
    return out


def incidence_conditions(
    base: RkTableau,
    couplings_fs: Sequence,
    couplings_sf: Sequence,
    M: int,
) -> Dict[str, bool]:
    """Sufficient incidence conditions for a.m. of a telescopic scheme built on one base method.

    Sums are evaluated on absolute values so that cancellation cannot hide a nonzero pattern.
    """
    A, b = np.abs(base.A), np.abs(base.b)
    s = base.s
    fs = [np.abs(to_array(a)) for a in couplings_fs]
    sf = [np.abs(to_array(a)) for a in couplings_sf]
    if len(fs) != M or len(sf) != M:
        raise InvalidParameter(f"expected {M} coupling matrices per direction")
    one_bT = np.outer(np.ones(s), b)

    A_M = np.kron(np.eye(M), A) + np.kron(np.tril(np.ones((M, M)), -1), one_bT)
    products = np.block([[fs[i] @ sf[j] for j in range(M)] for i in range(M)])
    bordered = np.zeros((s + 1, s + 1))
    bordered[:s, :s], bordered[s, :s] = A, b
    coupled = np.zeros((s + 1, s + 1))
    coupled[:s, :s] = sum(sf[k] @ fs[k] for k in range(M))
    coupled[s, :s] = sum(b @ fs[k] for k in range(M))

    verdicts = {
        "inc.fast-fast": _le(A_M @ A_M + products, A_M),
        "inc.slow-slow": _le(bordered @ bordered + coupled, bordered),
        "inc.fast-slow": all(
            _le(sum((one_bT @ fs[k] for k in range(i)), np.zeros((s, s))) + A @ fs[i] + fs[i] @ A, fs[i])
            for i in range(M)
        ),
        "inc.slow-fast": all(
            _le(sum((sf[k] @ one_bT for k in range(j + 1, M)), np.zeros((s, s))) + sf[j] @ A + A @ sf[j], sf[j])
            for j in range(M)
        ),
        "inc.weights": all(
            _le((M - 1 - j) * b + b @ A + b @ sf[j], b) for j in range(M)
        ),
        "inc.upper-zero-product": all(
            not np.any(_inc(fs[i] @ sf[j])) for i in range(M) for j in range(i + 1, M)
        ),
    }

    simple = all(not np.any(_inc(a)) for a in sf[1:]) and all(not np.any(_inc(a)) for a in fs[:-1])
    if simple:
        last_fs, first_sf = fs[-1], sf[0]
        verdicts.update({
            "inc.simple.fast-fast": _le(A @ A + last_fs @ first_sf, A),
            "inc.simple.weights": _le(b @ A + b @ last_fs, b),
            "inc.simple.fast-slow": _le(A @ last_fs + last_fs @ A, last_fs),
            "inc.simple.slow-fast": _le(first_sf @ A + A @ first_sf, first_sf),
        })

    extended = _extended_ahat(A, b, fs, sf, M)
    verdicts["inc.full"] = _le(extended @ extended, extended)
    return verdicts


def _extended_ahat(A: np.ndarray, b: np.ndarray, fs: List[np.ndarray], sf: List[np.ndarray], M: int) -> np.ndarray:
    """Ahat with an extra fast weight row, ordered [fast stages, fast weights, slow stages, weights]."""
    s = A.shape[0]
    nf = M * s
    n = nf + 1 + s + 1
    E = np.zeros((n, n))
    E[:nf, :nf] = np.kron(np.eye(M), A) + np.kron(np.tril(np.ones((M, M)), -1), np.outer(np.ones(s), b))
    E[:nf, nf + 1:nf + 1 + s] = np.vstack(fs)
    E[nf, :nf] = np.tile(b, M)
    E[nf + 1:nf + 1 + s, :nf] = np.hstack(sf)
    E[nf + 1:nf + 1 + s, nf + 1:nf + 1 + s] = A
    E[n - 1, :nf] = np.tile(b, M)
    E[n - 1, nf + 1:nf + 1 + s] = b
    return E


def is_telescopic(sch: MrGarkScheme, tol: float = NONZERO_THRESHOLD) -> bool:
    return (
        sch.fast.s == sch.slow.s
        and np.allclose(sch.fast.A, sch.slow.A, rtol=0, atol=tol)
        and np.allclose(sch.fast.b, sch.slow.b, rtol=0, atol=tol)
    )


def scheme_incidence_conditions(sch: MrGarkScheme) -> Dict[str, bool]:
    if not is_telescopic(sch):
        raise Unsupported("incidence conditions need the same base method for both partitions")
    return incidence_conditions(sch.fast, sch.couplings_fs, sch.couplings_sf, sch.M)


def monotonicity_report(
    target: Target,
    rho: Optional[float] = None,
    r_max: float = AM_R_MAX,
) -> MonotonicityReport:
    radius = am_radius(target, r_max)
    saturated = radius >= r_max
    samples = [0.5 * radius, radius]
    if not saturated:
        samples.append(min(radius + 10 * AM_RADIUS_TOL, r_max))
    checked = [(float(r), _am_or_false(target, r)) for r in samples]

    verdicts: Dict[str, bool] = {}
    if isinstance(target, MrGarkScheme):
        try:
            verdicts = scheme_incidence_conditions(target)
        except Unsupported as exc:
            logger.info("Skipping incidence conditions: %s", exc.message)

    return MonotonicityReport(
        radius=radius,
        saturated=saturated,
        am_checked_at=checked,
        incidence_verdicts=verdicts,
        step_bound=step_bound(radius, rho) if rho is not None else None,
    )
