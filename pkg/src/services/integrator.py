"""Fixed-step multirate GARK integration."""

import logging
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..config import STEP_DIVISIBILITY_TOL
from ..errors import Diverged, InvalidParameter, MrGarkError, NonConvergence, SingularJacobian
from ..models import (
    FlatGarkTableau,
    JacobianMode,
    MrGarkScheme,
    PartitionedIvp,
    SolverConfig,
    StepStats,
    StructureTag,
    Trajectory,
)
from .tableau import block_is_explicit, classify_structure, flatten, stage_blocks

logger = logging.getLogger(__name__)

Stepper = Union[MrGarkScheme, FlatGarkTableau]
Residual = Callable[[np.ndarray], np.ndarray]


def _fd_epsilon(cfg: SolverConfig) -> float:
    return cfg.fd_epsilon if cfg.fd_epsilon is not None else float(np.sqrt(np.finfo(float).eps))


def finite_difference_jacobian(fun: Residual, x: np.ndarray, fx: np.ndarray, eps: float) -> np.ndarray:
    """Forward differences with step eps·(1 + |x_i|)."""
    J = np.empty((fx.shape[0], x.shape[0]))
    for i in range(x.shape[0]):
        step = eps * (1.0 + abs(x[i]))
        xp = x.copy()
        xp[i] += step
        J[:, i] = (fun(xp) - fx) / step
    return J


def newton_solve(
    residual: Residual,
    jac: Optional[Callable[[np.ndarray], np.ndarray]],
    Y_guess: np.ndarray,
    cfg: Optional[SolverConfig] = None,
    stats: Optional[StepStats] = None,
) -> np.ndarray:
    """Solve residual(Y) = 0 with full Newton steps.

    Without ``jac`` the Jacobian is approximated by forward differences.
    """
    cfg = cfg or SolverConfig()
    Y = np.array(Y_guess, dtype=float)
    R = residual(Y)
    norm = float(np.max(np.abs(R), initial=0.0))
    if stats is not None:
        stats.newton_solves += 1

    for it in range(1, cfg.newton_max_iter + 1):
        if norm <= cfg.newton_tol:
            logger.debug("Newton converged after %d iterations", it - 1)
            return Y
        J = jac(Y) if jac is not None else finite_difference_jacobian(residual, Y, R, _fd_epsilon(cfg))
        lu, piv = lu_factor(J)
        pivots = np.abs(np.diag(lu))
        if np.min(pivots) <= np.finfo(float).eps * max(1.0, np.max(pivots)):
            raise SingularJacobian(f"Newton matrix is singular at iteration {it}")
        Y = Y + lu_solve((lu, piv), -R)
        R = residual(Y)
        norm = float(np.max(np.abs(R)))
        if stats is not None:
            stats.newton_iters += 1
        if not np.isfinite(norm):
            raise Diverged(f"Newton iterate became non-finite at iteration {it}")

    if norm <= cfg.newton_tol:
        return Y
    logger.warning("Newton stopped after %d iterations with residual %.3e", cfg.newton_max_iter, norm)
    raise NonConvergence(
        f"Newton did not converge in {cfg.newton_max_iter} iterations", residual=norm,
    )


class _Rhs:
    """Right-hand side part that counts its evaluations and rejects non-finite values."""

    def __init__(self, f, jac, stats: StepStats, counter: str):
        self.f = f
        self.jac = jac
        self.stats = stats
        self.counter = counter

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        setattr(self.stats, self.counter, getattr(self.stats, self.counter) + 1)
        out = np.asarray(self.f(t, y), dtype=float)
        if not np.all(np.isfinite(out)):
            raise Diverged(f"non-finite right-hand side at t={t}")
        return out


class _StageSystem:
    """Stage equations Y_i = y_n + H·Σ_j a_ij g_j(t_n + c_j H, Y_j) of a flattened tableau."""

    def __init__(self, flat: FlatGarkTableau, ivp: PartitionedIvp, y_n, t_n: float, H: float,
                 cfg: SolverConfig, stats: StepStats):
        self.flat = flat
        self.A = flat.full_matrix()
        self.c = flat.abscissae()
        self.n = self.A.shape[0]
        self.dim = ivp.dim
        self.y_n = np.asarray(y_n, dtype=float)
        self.t_n = t_n
        self.H = H
        self.cfg = cfg
        self.stats = stats
        fast = _Rhs(ivp.f_fast, ivp.jac_fast, stats, "rhs_fast_evals")
        slow = _Rhs(ivp.f_slow, ivp.jac_slow, stats, "rhs_slow_evals")
        self.parts = [fast] * flat.n_fast + [slow] * flat.n_slow
        self.analytic = cfg.jacobian_mode is JacobianMode.ANALYTIC and ivp.has_jacobians
        if cfg.jacobian_mode is JacobianMode.ANALYTIC and not ivp.has_jacobians:
            logger.debug("No analytic Jacobians for %s, using finite differences", ivp.name)
        self.Y = np.zeros((self.n, self.dim))
        self.K = np.zeros((self.n, self.dim))
        self.done = np.zeros(self.n, dtype=bool)

    def _eval(self, j: int, y: np.ndarray) -> np.ndarray:
        return self.parts[j](self.t_n + self.c[j] * self.H, y)

    def _known(self, idx: np.ndarray) -> np.ndarray:
        outside = self.A[np.ix_(idx, np.flatnonzero(self.done))]
        return self.y_n[None, :] + self.H * outside @ self.K[self.done]

    def solve_block(self, idx: np.ndarray) -> None:
        idx = np.asarray(idx)
        sub = self.A[np.ix_(idx, idx)]
        inner = stage_blocks(sub)
        if all(block_is_explicit(sub, blk) for blk in inner):
            for blk in inner:
                j = idx[blk[0]]
                self.Y[j] = self._known(np.array([j]))[0]
                self.K[j] = self._eval(j, self.Y[j])
                self.done[j] = True
            return
        self._newton_block(idx, sub)

    def _newton_block(self, idx: np.ndarray, sub: np.ndarray) -> None:
        base = self._known(idx)
        nb, dim, H = idx.size, self.dim, self.H

        def residual(z: np.ndarray) -> np.ndarray:
            Z = z.reshape(nb, dim)
            G = np.array([self._eval(j, Z[k]) for k, j in enumerate(idx)])
            return (Z - base - H * sub @ G).ravel()

        jac = None
        if self.analytic:
            def jac(z: np.ndarray) -> np.ndarray:
                Z = z.reshape(nb, dim)
                blocks = [
                    np.atleast_2d(self.parts[j].jac(self.t_n + self.c[j] * H, Z[k]))
                    for k, j in enumerate(idx)
                ]
                J = np.zeros((nb * dim, nb * dim))
                for k in range(nb):
                    for m in range(nb):
                        if sub[k, m] != 0.0:
                            J[k * dim:(k + 1) * dim, m * dim:(m + 1) * dim] = -H * sub[k, m] * blocks[m]
                return np.eye(nb * dim) + J

        z = newton_solve(residual, jac, base.ravel(), self.cfg, self.stats)
        Z = z.reshape(nb, dim)
        for k, j in enumerate(idx):
            self.Y[j] = Z[k]
            self.K[j] = self._eval(j, Z[k])
            self.done[j] = True

    def run(self, blocks: Sequence[np.ndarray]) -> None:
        for blk in blocks:
            self.solve_block(blk)

    def update(self) -> np.ndarray:
        return self.y_n + self.H * self.flat.weights() @ self.K

    def micro_states(self, M: int) -> np.ndarray:
        """ỹ_{n+λ/M} for λ = 1..M (fast increments only)."""
        nf = self.flat.n_fast
        sf = nf // M
        contributions = self.flat.b_f[:, None] * self.K[:nf]
        per_step = contributions.reshape(M, sf, self.dim).sum(axis=1)
        return self.y_n[None, :] + self.H * np.cumsum(per_step, axis=0)


def _mgark_blocks(sch: MrGarkScheme, flat: FlatGarkTableau) -> List[np.ndarray]:
    A = flat.full_matrix()
    tag = classify_structure(sch)
    nf, sf = flat.n_fast, sch.fast.s
    slow = np.arange(nf, nf + flat.n_slow)
    if tag in (StructureTag.EXPLICIT, StructureTag.STAGGERED):
        blocks = stage_blocks(A)
    elif tag is StructureTag.FIRST_MICROSTEP:
        blocks = [np.concatenate([np.arange(sf), slow])]
        blocks += [np.arange(lam * sf, (lam + 1) * sf) for lam in range(1, sch.M)]
    else:
        blocks = [np.arange(A.shape[0])]
    logger.debug("Scheme %s uses %s strategy with %d blocks", sch.name, tag.value, len(blocks))
    return blocks


def _flat_blocks(flat: FlatGarkTableau) -> List[np.ndarray]:
    A = flat.full_matrix()
    blocks = stage_blocks(A)
    if all(block_is_explicit(A, blk) for blk in blocks):
        return blocks
    return [np.arange(A.shape[0])]


def _stage_system(target: Stepper, ivp, y_n, t_n, H, cfg, stats) -> _StageSystem:
    if isinstance(target, MrGarkScheme):
        flat = flatten(target)
        blocks = _mgark_blocks(target, flat)
    else:
        flat = target
        blocks = _flat_blocks(flat)
    system = _StageSystem(flat, ivp, y_n, t_n, H, cfg, stats)
    system.run(blocks)
    return system


def mgark_step(
    sch: MrGarkScheme,
    ivp: PartitionedIvp,
    y_n,
    t_n: float,
    H: float,
    cfg: Optional[SolverConfig] = None,
) -> Tuple[np.ndarray, StepStats]:
    """One macro-step, solving stage groups in the order given by the scheme's structure."""
    if H < 0:
        raise InvalidParameter(f"step size must be non-negative, got {H}")
    stats = StepStats()
    system = _stage_system(sch, ivp, y_n, t_n, H, cfg or SolverConfig(), stats)
    return system.update(), stats


def flat_gark_step(
    flat: FlatGarkTableau,
    ivp: PartitionedIvp,
    y_n,
    t_n: float,
    H: float,
    cfg: Optional[SolverConfig] = None,
) -> np.ndarray:
    """One step of the flattened tableau: explicit cascade or one Newton solve over all stages."""
    system = _stage_system(flat, ivp, y_n, t_n, H, cfg or SolverConfig(), StepStats())
    return system.update()


def stage_values(
    target: Stepper,
    ivp: PartitionedIvp,
    y_n,
    t_n: float,
    H: float,
    cfg: Optional[SolverConfig] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """(fast stage values, slow stage values) of one step, one row per stage."""
    if isinstance(target, MrGarkScheme):
        nf = target.M * target.fast.s
    else:
        nf = target.n_fast
    system = _stage_system(target, ivp, y_n, t_n, H, cfg or SolverConfig(), StepStats())
    return system.Y[:nf].copy(), system.Y[nf:].copy()


def step_count(t0: float, t_end: float, H: float) -> int:
    if H <= 0:
        raise InvalidParameter(f"step size must be positive, got {H}")
    ratio = (t_end - t0) / H
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > STEP_DIVISIBILITY_TOL * max(1.0, abs(ratio)):
        raise InvalidParameter(f"H={H} does not divide the interval [{t0}, {t_end}]")
    return n


def integrate(
    stepper: Stepper,
    ivp: PartitionedIvp,
    t_end: float,
    H: float,
    cfg: Optional[SolverConfig] = None,
    record_micro: bool = False,
) -> Trajectory:
    """Apply n = (t_end - t0)/H macro-steps; errors carry the partial trajectory."""
    cfg = cfg or SolverConfig()
    n_steps = step_count(ivp.t0, t_end, H)
    M = stepper.M if isinstance(stepper, MrGarkScheme) else stepper.step_ratio
    times = [ivp.t0]
    states = [np.asarray(ivp.y0, dtype=float)]
    micro: List[np.ndarray] = []
    total = StepStats()

    for k in range(1, n_steps + 1):
        t_n = times[-1]
        stats = StepStats()
        try:
            system = _stage_system(stepper, ivp, states[-1], t_n, H, cfg, stats)
            y_next = system.update()
            if not np.all(np.isfinite(y_next)):
                raise Diverged(f"non-finite solution at t={t_n + H}", H=H)
        except MrGarkError as exc:
            total.add(stats)
            exc.trajectory = Trajectory(times=times, states=np.array(states), stats=total)
            logger.warning("Integration stopped at t=%g: %s", t_n, exc.message)
            raise
        total.add(stats)
        if record_micro and M > 1:
            micro.extend(system.micro_states(M))
        times.append(t_end if k == n_steps else ivp.t0 + k * H)
        states.append(y_next)

    return Trajectory(
        times=times,
        states=np.array(states),
        micro_states=np.array(micro) if micro else None,
        stats=total,
    )
