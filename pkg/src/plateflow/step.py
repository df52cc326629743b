"""One implicit step of the obstacle flow.

Each step minimizes  bending energy + (1/2 tau) * squared L2 distance to the
previous state  over the set {u >= f}.  Two routes are provided and cross
check each other:

* a penalty continuation that replaces the constraint by the quadratic hinge
  (gap)^2 / eps on the violated part and drives eps down a schedule with a
  semismooth Newton solve per value, and
* an exact primal-dual active-set solve of the bound-constrained SPD
  quadratic program, with cycle detection and an accelerated projected
  gradient fallback.

The default strategy runs the continuation for warm starts and finishes with
the exact solve.  Every result carries the discrete velocity and the
multiplier density (bilaplacian of the new state plus velocity), which is
nonnegative and supported on the contact set up to solver tolerance.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import linalg
from .grid import (
    Grid,
    bending_energy,
    bilaplacian,
    bilaplacian_row_sum_bound,
    l2_norm,
)

DEFAULT_EPS_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
_MAX_SCHEDULE_SPLITS = 8
_MAX_PDAS_ITERS = 100
_DESCENT_RTOL = 1e-12
_KKT_RTOL = 1e-10


class NoConvergence(RuntimeError):
    """A solver exhausted its iteration budget."""

    def __init__(self, message: str, limit: int):
        super().__init__(f"{message} (limit {limit})")
        self.limit = limit


class DescentViolation(RuntimeError):
    """The step objective increased, which a correct solver cannot produce."""


class _CycleDetected(Exception):
    pass


@dataclass(frozen=True)
class StepConfig:
    """Knobs for one implicit step; tau is the time-step length."""

    tau: float
    penalty_eps_schedule: tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    newton_tol: float = 1e-10
    max_newton_iters: int = 100
    solver: str = "penalty_then_polish"
    fallback_pg_iters: int = 100_000

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise ValueError(f"tau must be positive, got {self.tau}")
        sched = tuple(float(e) for e in self.penalty_eps_schedule)
        if not sched or any(e <= 0.0 for e in sched):
            raise ValueError("penalty schedule must be positive")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError("penalty schedule must be strictly decreasing")
        object.__setattr__(self, "penalty_eps_schedule", sched)
        if self.newton_tol <= 0.0:
            raise ValueError("newton_tol must be positive")
        if self.max_newton_iters < 1 or self.fallback_pg_iters < 1:
            raise ValueError("iteration limits must be at least 1")
        if self.solver not in ("penalty_then_polish", "active_set", "penalty_only"):
            raise ValueError(f"unknown solver strategy {self.solver!r}")


@dataclass(frozen=True)
class PenaltyRecord:
    """Telemetry for one value of the penalty parameter."""

    eps: float
    newton_iters: int
    residual: float
    violation_sup: float
    violation_l2: float
    penalty_mass: float
    energy: float
    objective: float


@dataclass(frozen=True)
class StepResult:
    u: np.ndarray
    velocity: np.ndarray
    multiplier: np.ndarray
    energy: float
    objective: float
    active_set: np.ndarray
    penalty_profile: tuple[PenaltyRecord, ...]
    iterations: dict = field(default_factory=dict)
    mass: float = 0.0
    multiplier_negativity: float = 0.0
    feasibility_defect: float = 0.0


def contact_tolerance(f: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.max(np.abs(f))))


def multiplier_tolerance(multiplier: np.ndarray) -> float:
    return 1e-8 * (1.0 + float(np.max(np.abs(multiplier))))


def penalty_value(gap: np.ndarray, eps: float) -> np.ndarray:
    """Quadratic hinge gap^2/eps on the violated part, zero elsewhere."""
    neg = np.minimum(gap, 0.0)
    return neg * neg / eps


def penalty_slope(gap: np.ndarray, eps: float) -> np.ndarray:
    return np.where(gap < 0.0, 2.0 * gap / eps, 0.0)


def step_objective(grid: Grid, u: np.ndarray, u_prev: np.ndarray, tau: float) -> float:
    diff = u - u_prev
    return bending_energy(grid, u) + grid.quad_weight / (2.0 * tau) * float(np.dot(diff, diff))


def _apply_density(grid: Grid, tau, u: np.ndarray) -> np.ndarray:
    """Matrix-free density operator: B u (+ u/tau when a step length is set)."""
    out = bilaplacian(grid, u)
    if tau is not None:
        out += u / tau
    return out


def _density_matrix(grid: Grid, tau) -> sp.csr_matrix:
    mat = linalg.bilaplacian_matrix(grid)
    if tau is None:
        return mat
    return (mat + sp.identity(mat.shape[0], format="csr") / tau).tocsr()


def solve_step_penalty(
    grid: Grid,
    u_prev: np.ndarray,
    f: np.ndarray,
    tau: float,
    eps: float,
    cfg: StepConfig,
    w_start: np.ndarray | None = None,
) -> tuple[np.ndarray, PenaltyRecord]:
    """Minimize the eps-penalized step functional by semismooth Newton.

    The stationarity system is B w + (w - u_prev)/tau + slope(w - f) = 0 with
    the piecewise-linear hinge slope; each Newton iteration re-solves with the
    current violation pattern, so the method terminates once the pattern
    settles.  Convergence is declared when the sup-norm of the residual drops
    below newton_tol times the natural scale 1/tau + 1/eps + row-sum bound.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    u_prev = np.asarray(u_prev, dtype=float)
    f = np.asarray(f, dtype=float)
    if u_prev.shape != (grid.n_interior,) or f.shape != (grid.n_interior,):
        raise ValueError("u_prev and f must match the grid")
    scale = 1.0 / tau + 1.0 / eps + bilaplacian_row_sum_bound(grid)
    tol = cfg.newton_tol * scale
    base = linalg.bilaplacian_matrix(grid)
    w = (u_prev if w_start is None else np.asarray(w_start, dtype=float)).copy()
    iters = 0
    while True:
        gap = w - f
        residual = _apply_density(grid, tau, w) - u_prev / tau + penalty_slope(gap, eps)
        rnorm = float(np.max(np.abs(residual)))
        if rnorm <= tol:
            break
        if iters >= cfg.max_newton_iters:
            raise NoConvergence(
                f"penalty Newton stalled at eps={eps:g}, residual {rnorm:.3e} > {tol:.3e}",
                cfg.max_newton_iters,
            )
        weights = np.where(gap < 0.0, 2.0 / eps, 0.0) + 1.0 / tau
        jac = base + sp.diags(weights)
        w = w + linalg.solve_refined(jac, -residual)
        iters += 1
    gap = w - f
    violation = np.minimum(gap, 0.0)
    record = PenaltyRecord(
        eps=eps,
        newton_iters=iters,
        residual=rnorm,
        violation_sup=float(np.max(-violation)),
        violation_l2=l2_norm(grid, violation),
        penalty_mass=grid.quad_weight * float(np.sum(penalty_value(gap, eps))),
        energy=bending_energy(grid, w),
        objective=step_objective(grid, w, u_prev, tau)
        + grid.quad_weight * float(np.sum(penalty_value(gap, eps))),
    )
    return w, record


def _equality_solve(Hd: sp.csr_matrix, bd: np.ndarray, f: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Solve the QP with the active nodes pinned to the obstacle."""
    u = np.empty_like(bd)
    u[active] = f[active]
    free = ~active
    if free.any():
        rhs = bd[free]
        if active.any():
            rhs = rhs - Hd[free][:, active] @ f[active]
        u[free] = linalg.solve_refined(Hd[free][:, free], rhs)
    return u


def _pdas(grid, tau, bd, f, active_start):
    """Primal-dual active-set iteration; raises _CycleDetected on repeats."""
    n = grid.n_interior
    Hd = _density_matrix(grid, tau)
    weight = float(np.mean(Hd.diagonal()))
    active = np.zeros(n, dtype=bool) if active_start is None else active_start.copy()
    seen = set()
    for it in range(_MAX_PDAS_ITERS):
        key = active.tobytes()
        if key in seen:
            raise _CycleDetected(f"active set repeated after {it} iterations")
        seen.add(key)
        u = _equality_solve(Hd, bd, f, active)
        lam = _apply_density(grid, tau, u) - bd
        new_active = (lam + weight * (f - u)) > 0.0
        if np.array_equal(new_active, active):
            return u, active, lam, it + 1
        active = new_active
    raise _CycleDetected(f"no fixed point within {_MAX_PDAS_ITERS} iterations")


def _accelerated_projected_gradient(grid, tau, bd, f, x0, cfg):
    """FISTA with restart on the bound-constrained QP; globally convergent."""
    lipschitz = bilaplacian_row_sum_bound(grid) + (1.0 / tau if tau is not None else 0.0)
    step = 1.0 / lipschitz
    scale = 1.0 + float(np.max(np.abs(bd)))
    act_tol = contact_tolerance(f)
    x = np.maximum(np.asarray(x0, dtype=float), f)
    y = x.copy()
    t = 1.0
    iters = 0
    while iters < cfg.fallback_pg_iters:
        g = _apply_density(grid, tau, y) - bd
        x_new = np.maximum(y - step * g, f)
        if float(np.dot(g, x_new - x)) > 0.0:
            t = 1.0  # momentum restart
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        iters += 1
        if iters % 10 == 0 or iters == cfg.fallback_pg_iters:
            gx = _apply_density(grid, tau, x) - bd
            projected = np.where(x - f <= act_tol, np.minimum(gx, 0.0), gx)
            if float(np.max(np.abs(projected))) <= 1e-11 * (scale + float(np.max(np.abs(gx)))):
                return x, iters
    raise NoConvergence("projected-gradient fallback exhausted", cfg.fallback_pg_iters)


def _verify_kkt(grid, tau, bd, f, u, active, lam):
    scale = 1.0 + float(np.max(np.abs(bd))) + float(np.max(np.abs(lam + bd)))
    stationarity = float(np.max(np.abs(np.where(active, 0.0, lam))))
    negativity = float(np.max(np.where(active, -lam, 0.0), initial=0.0))
    violation = float(np.max(f - u, initial=0.0))
    worst = max(stationarity, negativity, violation)
    if worst > _KKT_RTOL * scale:
        raise NoConvergence(
            f"KKT verification failed: residual {worst:.3e} vs scale {scale:.3e}",
            _MAX_PDAS_ITERS,
        )


def _solve_bound_qp(grid, tau, bd, f, cfg, active_start=None, stats=None):
    """Exact bound-constrained solve shared by the step and the steady state."""
    pg_iters = 0
    try:
        u, active, lam, pdas_iters = _pdas(grid, tau, bd, f, active_start)
    except _CycleDetected:
        x, pg_iters = _accelerated_projected_gradient(grid, tau, bd, f, f, cfg)
        restart = (x - f) <= contact_tolerance(f)
        try:
            u, active, lam, pdas_iters = _pdas(grid, tau, bd, f, restart)
        except _CycleDetected as exc:
            raise NoConvergence(f"active-set solve cycled: {exc}", cfg.fallback_pg_iters) from exc
    _verify_kkt(grid, tau, bd, f, u, active, lam)
    if stats is not None:
        stats["pdas_iterations"] = stats.get("pdas_iterations", 0) + pdas_iters
        stats["pg_iterations"] = stats.get("pg_iterations", 0) + pg_iters
    return u, active, lam


def solve_step_active_set(
    grid: Grid,
    u_prev: np.ndarray,
    f: np.ndarray,
    tau: float,
    cfg: StepConfig,
    active_start: np.ndarray | None = None,
    stats: dict | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact minimizer of the step QP; returns (state, active set, multipliers).

    The multipliers are reported in the quadrature-weighted scale, i.e. for
    H = quad_weight (B + I/tau) and b = quad_weight u_prev / tau the returned
    lambda satisfies H u - b - lambda = 0, lambda >= 0 and lambda (u - f) = 0
    up to the verified KKT tolerance.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    f = np.asarray(f, dtype=float)
    if u_prev.shape != (grid.n_interior,) or f.shape != (grid.n_interior,):
        raise ValueError("u_prev and f must match the grid")
    bd = u_prev / tau
    u, active, lam = _solve_bound_qp(grid, tau, bd, f, cfg, active_start, stats)
    multipliers = grid.quad_weight * np.where(active, lam, 0.0)
    return u, active, multipliers


def measure_mass(grid: Grid, multiplier: np.ndarray) -> float:
    """Total mass of the multiplier density; negative entries are clamped."""
    multiplier = np.asarray(multiplier, dtype=float)
    return grid.quad_weight * float(np.sum(np.maximum(multiplier, 0.0)))


def multiplier_negativity(multiplier: np.ndarray) -> float:
    """Largest negative excursion of the multiplier density (a defect)."""
    return max(0.0, -float(np.min(multiplier, initial=0.0)))


def solve_step(grid: Grid, u_prev: np.ndarray, f: np.ndarray, cfg: StepConfig) -> StepResult:
    """Run the configured strategy for one step and assemble the result.

    Raises DescentViolation if the step objective fails to decrease, which
    signals a solver bug rather than bad data.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    f = np.asarray(f, dtype=float)
    tau = cfg.tau
    profile: list[PenaltyRecord] = []
    stats = {"newton_iterations": 0, "pdas_iterations": 0, "pg_iterations": 0}
    w = None
    if cfg.solver in ("penalty_then_polish", "penalty_only"):
        w = u_prev.copy()
        pending = deque(cfg.penalty_eps_schedule)
        prev_eps = None
        splits = 0
        while pending:
            eps = pending.popleft()
            try:
                w, record = solve_step_penalty(grid, u_prev, f, tau, eps, cfg, w_start=w)
            except NoConvergence:
                # the jump was too aggressive: retry through a geometric midpoint
                if prev_eps is None or splits >= _MAX_SCHEDULE_SPLITS:
                    raise
                pending.appendleft(eps)
                pending.appendleft(math.sqrt(prev_eps * eps))
                splits += 1
                continue
            stats["newton_iterations"] += record.newton_iters
            profile.append(record)
            prev_eps = eps

    if cfg.solver == "penalty_only":
        u = w
    else:
        start = None
        if w is not None:
            start = (w - f) <= contact_tolerance(f)
        u, _, _ = solve_step_active_set(grid, u_prev, f, tau, cfg, active_start=start, stats=stats)

    velocity = (u - u_prev) / tau
    multiplier = bilaplacian(grid, u) + velocity
    energy = bending_energy(grid, u)
    objective = step_objective(grid, u, u_prev, tau)
    previous_objective = bending_energy(grid, u_prev)
    if objective > previous_objective + _DESCENT_RTOL * max(1.0, previous_objective):
        raise DescentViolation(
            f"objective rose from {previous_objective!r} to {objective!r}"
        )
    tol = contact_tolerance(f)
    active_set = (u - f) <= tol
    for arr in (u, velocity, multiplier, active_set):
        arr.setflags(write=False)
    return StepResult(
        u=u,
        velocity=velocity,
        multiplier=multiplier,
        energy=energy,
        objective=objective,
        active_set=active_set,
        penalty_profile=tuple(profile),
        iterations=stats,
        mass=measure_mass(grid, multiplier),
        multiplier_negativity=multiplier_negativity(multiplier),
        feasibility_defect=max(0.0, float(np.max(f - u))),
    )
