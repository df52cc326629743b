"""Problem data: obstacle and initial state on a clamped-plate grid.

The obstacle must be strictly negative on the boundary so the constraint is
inactive at the wall, and the initial state must sit on or above the obstacle
at every interior node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, boundary_coordinates, interior_coordinates


class BoundarySignError(ValueError):
    """Obstacle is nonnegative somewhere on the boundary."""


class ObstacleViolation(ValueError):
    """A state dips below the obstacle."""


class NonFinite(ValueError):
    """A sampled value is NaN or infinite."""


@dataclass(frozen=True)
class ObstacleProblem:
    grid: Grid
    f_interior: np.ndarray
    f_boundary: np.ndarray
    u0: np.ndarray

    def validate(self) -> "ObstacleProblem":
        for name, arr in (("f_interior", self.f_interior),
                          ("f_boundary", self.f_boundary),
                          ("u0", self.u0)):
            if not np.all(np.isfinite(arr)):
                raise NonFinite(f"{name} contains non-finite values")
        if np.any(self.f_boundary >= 0.0):
            worst = float(np.max(self.f_boundary))
            raise BoundarySignError(
                f"obstacle must be negative on the boundary (max boundary value {worst})"
            )
        gap = self.u0 - self.f_interior
        if np.any(gap < 0.0):
            raise ObstacleViolation(
                f"initial state dips below the obstacle by {-float(np.min(gap))}"
            )
        return self


def _sample(sampler, points: np.ndarray) -> np.ndarray:
    values = np.array([float(sampler(*pt)) for pt in points])
    if not np.all(np.isfinite(values)):
        raise NonFinite("sampler returned a non-finite value")
    return values


def build_problem(grid: Grid, f_sampler, u0_sampler) -> ObstacleProblem:
    """Sample obstacle (all nodes) and initial state (interior), then validate.

    Samplers are pointwise functions of the node coordinates: f(x) in 1D,
    f(x, y) in 2D.
    """
    f_interior = _sample(f_sampler, interior_coordinates(grid))
    f_boundary = _sample(f_sampler, boundary_coordinates(grid))
    u0 = _sample(u0_sampler, interior_coordinates(grid))
    f_interior.setflags(write=False)
    f_boundary.setflags(write=False)
    u0.setflags(write=False)
    return ObstacleProblem(grid, f_interior, f_boundary, u0).validate()
