"""Full minimizing-movement trajectory on [0, T] and its interpolants."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid import bending_energy, l2_norm, weighted_norms
from .problem import ObstacleProblem
from .step import StepConfig, StepResult, solve_step


class StepFailure(RuntimeError):
    """A step solver failed; carries the 1-based index of the failing step."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"step {index} failed: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class Trajectory:
    problem: ObstacleProblem
    tau: float
    n_steps: int
    u0: np.ndarray
    steps: tuple[StepResult, ...]
    energies: np.ndarray  # length n_steps + 1, starting from the initial energy

    @property
    def horizon(self) -> float:
        return self.tau * self.n_steps

    def state(self, index: int) -> np.ndarray:
        """State after `index` steps; index 0 is the initial datum."""
        if index == 0:
            return self.u0
        return self.steps[index - 1].u

    def states(self) -> np.ndarray:
        """(n_steps + 1, n_interior) array of all states in time order."""
        return np.stack([self.state(i) for i in range(self.n_steps + 1)])


def run_flow(problem: ObstacleProblem, T: float, n: int, cfg: StepConfig) -> Trajectory:
    """Chain n implicit steps of length T/n starting from the initial datum.

    The tau carried by cfg is replaced by T/n; all other solver knobs are
    taken as given.  Any step failure aborts the run with the failing index.
    """
    if not (math.isfinite(T) and T > 0.0):
        raise ValueError(f"horizon T must be positive, got {T}")
    if n < 1:
        raise ValueError(f"need at least one step, got n={n}")
    tau = T / n
    cfg = dataclasses.replace(cfg, tau=tau)
    grid = problem.grid
    u = problem.u0.copy()
    u.setflags(write=False)
    steps: list[StepResult] = []
    for i in range(1, n + 1):
        try:
            result = solve_step(grid, u, problem.f_interior, cfg)
        except Exception as exc:
            raise StepFailure(i, exc) from exc
        steps.append(result)
        u = result.u
    energies = np.array([bending_energy(grid, problem.u0)] + [s.energy for s in steps])
    energies.setflags(write=False)
    return Trajectory(
        problem=problem,
        tau=tau,
        n_steps=n,
        u0=problem.u0,
        steps=tuple(steps),
        energies=energies,
    )


def _covering_interval(tr: Trajectory, t: float) -> int:
    """1-based index i with t in [(i-1) tau, i tau], clipped to the last step."""
    i = int(math.floor(t / tr.tau)) + 1
    return min(max(i, 1), tr.n_steps)


def eval_interpolant(tr: Trajectory, t: float, kind: str) -> np.ndarray:
    """Evaluate the piecewise linear or piecewise constant reconstruction.

    The linear one is affine on each step interval and matches the states at
    the endpoints.  The constant one takes the *end* state of the covering
    interval, so at t = 0 it already equals the first step's state; both agree
    with the final state at t = T.
    """
    if not 0.0 <= t <= tr.horizon:
        raise ValueError(f"t={t} outside [0, {tr.horizon}]")
    i = _covering_interval(tr, t)
    if kind == "constant":
        return tr.steps[i - 1].u.copy()
    if kind == "linear":
        local = t - (i - 1) * tr.tau
        return tr.state(i - 1) + local * tr.steps[i - 1].velocity
    raise ValueError(f"unknown interpolant kind {kind!r}")


class TrajectoryAggregates(NamedTuple):
    dissipation: float
    mass_sq_sum: float
    w2inf_sum: float


def trajectory_aggregates(tr: Trajectory) -> TrajectoryAggregates:
    """The three time sums monitored along a run.

    dissipation = tau * sum of squared L2 velocity norms, mass_sq_sum =
    tau * sum of squared multiplier masses, w2inf_sum = tau * sum of squared
    sup norms of the second differences.
    """
    grid = tr.problem.grid
    dissipation = tr.tau * sum(l2_norm(grid, s.velocity) ** 2 for s in tr.steps)
    mass_sq = tr.tau * sum(s.mass ** 2 for s in tr.steps)
    w2inf = tr.tau * sum(weighted_norms(grid, s.u)[2] ** 2 for s in tr.steps)
    return TrajectoryAggregates(dissipation, mass_sq, w2inf)
