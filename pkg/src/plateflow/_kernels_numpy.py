"""Pure-numpy stencil kernels (fallback path, see kernels.py for selection).

All kernels share the clamped-plate boundary convention: the solution is zero
at boundary nodes and the ghost value outside the domain mirrors the first
interior value, so the discrete normal derivative at the wall vanishes.
"""

import numpy as np


def laplacian_1d(u, h):
    """Second-difference Laplacian of an interior field, evaluated at all nodes."""
    m = u.shape[0]
    inv = 1.0 / (h * h)
    padded = np.zeros(m + 2)
    padded[1:-1] = u
    out = np.empty(m + 2)
    out[1:-1] = (padded[:-2] - 2.0 * padded[1:-1] + padded[2:]) * inv
    # wall rows: u=0 there and the ghost mirrors the adjacent interior value
    out[0] = 2.0 * u[0] * inv
    out[-1] = 2.0 * u[-1] * inv
    return out


def laplacian_adjoint_1d(w, h):
    """Transpose of laplacian_1d: maps an all-node field back to the interior."""
    inv = 1.0 / (h * h)
    wd = w.copy()
    wd[0] *= 2.0
    wd[-1] *= 2.0
    return (wd[:-2] - 2.0 * wd[1:-1] + wd[2:]) * inv


def laplacian_2d(u, h1, h2):
    m1, m2 = u.shape
    inv1 = 1.0 / (h1 * h1)
    inv2 = 1.0 / (h2 * h2)
    ext = np.zeros((m1 + 2, m2 + 2))
    ext[1:-1, 1:-1] = u
    out = np.zeros((m1 + 2, m2 + 2))
    out[1:-1, 1:-1] = (ext[:-2, 1:-1] - 2.0 * ext[1:-1, 1:-1] + ext[2:, 1:-1]) * inv1 + (
        ext[1:-1, :-2] - 2.0 * ext[1:-1, 1:-1] + ext[1:-1, 2:]
    ) * inv2
    out[0, 1:-1] = 2.0 * u[0, :] * inv1
    out[-1, 1:-1] = 2.0 * u[-1, :] * inv1
    out[1:-1, 0] = 2.0 * u[:, 0] * inv2
    out[1:-1, -1] = 2.0 * u[:, -1] * inv2
    # corner rows are identically zero: every stencil neighbour is a wall node
    return out


def laplacian_adjoint_2d(w, h1, h2):
    inv1 = 1.0 / (h1 * h1)
    inv2 = 1.0 / (h2 * h2)
    wd = w.copy()
    wd[0, :] *= 2.0
    wd[-1, :] *= 2.0
    wd[:, 0] *= 2.0
    wd[:, -1] *= 2.0
    return (wd[:-2, 1:-1] - 2.0 * wd[1:-1, 1:-1] + wd[2:, 1:-1]) * inv1 + (
        wd[1:-1, :-2] - 2.0 * wd[1:-1, 1:-1] + wd[1:-1, 2:]
    ) * inv2
