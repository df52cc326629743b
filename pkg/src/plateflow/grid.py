"""Discrete domain: box grids, the clamped-plate Laplacian, energy and norms.

A field lives on the interior nodes of a 1D interval or 2D rectangle, stored
flat in lexicographic node order.  The extended Laplacian evaluates the
second-difference Laplacian at *every* node (boundary included) using zero
wall values and ghost reflection, which encodes the clamped conditions u = 0
and du/dn = 0.  The bending energy is

    E_h(u) = (quad_weight / 2) * sum over all nodes of (Lu)^2

and its exact gradient is quad_weight * L^T (L u); the bilaplacian density is
that gradient divided by quad_weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class Grid:
    """Uniform box grid with clamped-plate node layout.

    Spacing along axis k is lengths[k] / (interior_counts[k] + 1); node
    coordinates are integer multiples of the spacing, and quad_weight is the
    volume of one cell (product of the spacings).
    """

    dim: int
    lengths: tuple[float, ...]
    interior_counts: tuple[int, ...]
    spacing: tuple[float, ...]
    quad_weight: float

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return self.interior_counts

    @property
    def n_interior(self) -> int:
        return int(np.prod(self.interior_counts))

    @property
    def extended_shape(self) -> tuple[int, ...]:
        return tuple(m + 2 for m in self.interior_counts)

    @property
    def n_extended(self) -> int:
        return int(np.prod(self.extended_shape))


def build_grid(dim: int, lengths, interior_counts) -> Grid:
    """Validate the box description and derive spacing and quadrature weight."""
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    lengths = tuple(float(v) for v in np.atleast_1d(lengths))
    counts = tuple(int(v) for v in np.atleast_1d(interior_counts))
    if len(lengths) != dim or len(counts) != dim:
        raise ValueError(
            f"expected {dim} lengths and interior counts, got {len(lengths)} and {len(counts)}"
        )
    if any(not math.isfinite(L) or L <= 0.0 for L in lengths):
        raise ValueError(f"lengths must be positive, got {lengths}")
    if any(m < 1 for m in counts):
        raise ValueError(f"interior counts must be >= 1, got {counts}")
    spacing = tuple(L / (m + 1) for L, m in zip(lengths, counts))
    quad_weight = float(np.prod(spacing))
    return Grid(dim, lengths, counts, spacing, quad_weight)


def _check_interior(grid: Grid, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_interior,):
        raise ValueError(f"field has shape {u.shape}, expected ({grid.n_interior},)")
    return u


def _check_extended(grid: Grid, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (grid.n_extended,):
        raise ValueError(f"extended field has shape {w.shape}, expected ({grid.n_extended},)")
    return w


def interior_coordinates(grid: Grid) -> np.ndarray:
    """(n_interior, dim) node coordinates in lexicographic order."""
    axes = [h * np.arange(1, m + 1) for h, m in zip(grid.spacing, grid.interior_counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.ravel() for a in mesh], axis=1)


def extended_coordinates(grid: Grid) -> np.ndarray:
    """(n_extended, dim) coordinates of all nodes in lexicographic order."""
    axes = [h * np.arange(0, m + 2) for h, m in zip(grid.spacing, grid.interior_counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.ravel() for a in mesh], axis=1)


def boundary_mask(grid: Grid) -> np.ndarray:
    """Boolean mask over extended nodes marking the boundary ones."""
    mask = np.zeros(grid.extended_shape, dtype=bool)
    for axis in range(grid.dim):
        idx_lo = [slice(None)] * grid.dim
        idx_lo[axis] = 0
        mask[tuple(idx_lo)] = True
        idx_hi = [slice(None)] * grid.dim
        idx_hi[axis] = -1
        mask[tuple(idx_hi)] = True
    return mask.ravel()


def boundary_coordinates(grid: Grid) -> np.ndarray:
    return extended_coordinates(grid)[boundary_mask(grid)]


def extended_laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Apply the clamped-plate Laplacian; the result covers all nodes."""
    u = _check_interior(grid, u)
    if grid.dim == 1:
        return kernels.laplacian_1d(u, grid.spacing[0])
    u2 = u.reshape(grid.interior_shape)
    return kernels.laplacian_2d(u2, grid.spacing[0], grid.spacing[1]).ravel()


def laplacian_adjoint(grid: Grid, w: np.ndarray) -> np.ndarray:
    """Transpose of extended_laplacian (plain euclidean pairing)."""
    w = _check_extended(grid, w)
    if grid.dim == 1:
        return kernels.laplacian_adjoint_1d(w, grid.spacing[0])
    w2 = w.reshape(grid.extended_shape)
    return kernels.laplacian_adjoint_2d(w2, grid.spacing[0], grid.spacing[1]).ravel()


def bilaplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Bilaplacian density B u = L^T (L u)."""
    return laplacian_adjoint(grid, extended_laplacian(grid, u))


def bilaplacian_row_sum_bound(grid: Grid) -> float:
    """Upper bound on the row sums of |B|, used to scale residual tolerances."""
    s = sum(4.0 / (h * h) for h in grid.spacing)
    d = sum(4.0 / (h ** 4) for h in grid.spacing)
    return s * s + d


def bending_energy(grid: Grid, u: np.ndarray) -> float:
    w = extended_laplacian(grid, u)
    return 0.5 * grid.quad_weight * float(np.dot(w, w))


def energy_and_gradient(grid: Grid, u: np.ndarray) -> tuple[float, np.ndarray]:
    """Bending energy and its exact derivative with respect to each node value."""
    w = extended_laplacian(grid, u)
    energy = 0.5 * grid.quad_weight * float(np.dot(w, w))
    gradient = grid.quad_weight * laplacian_adjoint(grid, w)
    return energy, gradient


def l2_norm(grid: Grid, values: np.ndarray) -> float:
    """Quadrature-weighted L2 norm (works for interior and extended fields)."""
    values = np.asarray(values, dtype=float)
    return math.sqrt(grid.quad_weight * float(np.dot(values, values)))


def second_difference_sup(grid: Grid, u: np.ndarray) -> float:
    """Max over interior nodes and axes of the pure second central difference."""
    u = _check_interior(grid, u)
    shaped = u.reshape(grid.interior_shape)
    padded = np.zeros(grid.extended_shape)
    padded[(slice(1, -1),) * grid.dim] = shaped
    worst = 0.0
    for axis, h in enumerate(grid.spacing):
        lo = [slice(1, -1)] * grid.dim
        hi = [slice(1, -1)] * grid.dim
        mid = [slice(1, -1)] * grid.dim
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        diff = (padded[tuple(lo)] - 2.0 * padded[tuple(mid)] + padded[tuple(hi)]) / (h * h)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def weighted_norms(grid: Grid, u: np.ndarray) -> tuple[float, float, float]:
    """(L2 norm, sup norm, sup of second differences) of an interior field."""
    u = _check_interior(grid, u)
    l2 = l2_norm(grid, u)
    sup = float(np.max(np.abs(u))) if u.size else 0.0
    return l2, sup, second_difference_sup(grid, u)
