"""Numba-jitted stencil kernels (hot path, see kernels.py for selection)."""

import numpy as np
from numba import njit


@njit(cache=True)
def laplacian_1d(u, h):
    m = u.shape[0]
    inv = 1.0 / (h * h)
    out = np.empty(m + 2)
    out[0] = 2.0 * u[0] * inv
    out[m + 1] = 2.0 * u[m - 1] * inv
    for j in range(m):
        left = u[j - 1] if j > 0 else 0.0
        right = u[j + 1] if j < m - 1 else 0.0
        out[j + 1] = (left - 2.0 * u[j] + right) * inv
    return out


@njit(cache=True)
def laplacian_adjoint_1d(w, h):
    m = w.shape[0] - 2
    inv = 1.0 / (h * h)
    out = np.empty(m)
    for j in range(m):
        left = w[j] if j > 0 else 2.0 * w[0]
        right = w[j + 2] if j < m - 1 else 2.0 * w[m + 1]
        out[j] = (left - 2.0 * w[j + 1] + right) * inv
    return out


@njit(cache=True)
def laplacian_2d(u, h1, h2):
    m1, m2 = u.shape
    inv1 = 1.0 / (h1 * h1)
    inv2 = 1.0 / (h2 * h2)
    out = np.zeros((m1 + 2, m2 + 2))
    for i in range(m1):
        for j in range(m2):
            up = u[i - 1, j] if i > 0 else 0.0
            down = u[i + 1, j] if i < m1 - 1 else 0.0
            left = u[i, j - 1] if j > 0 else 0.0
            right = u[i, j + 1] if j < m2 - 1 else 0.0
            out[i + 1, j + 1] = (up - 2.0 * u[i, j] + down) * inv1 + (
                left - 2.0 * u[i, j] + right
            ) * inv2
    for j in range(m2):
        out[0, j + 1] = 2.0 * u[0, j] * inv1
        out[m1 + 1, j + 1] = 2.0 * u[m1 - 1, j] * inv1
    for i in range(m1):
        out[i + 1, 0] = 2.0 * u[i, 0] * inv2
        out[i + 1, m2 + 1] = 2.0 * u[i, m2 - 1] * inv2
    return out


@njit(cache=True)
def laplacian_adjoint_2d(w, h1, h2):
    m1 = w.shape[0] - 2
    m2 = w.shape[1] - 2
    inv1 = 1.0 / (h1 * h1)
    inv2 = 1.0 / (h2 * h2)
    out = np.empty((m1, m2))
    for i in range(m1):
        for j in range(m2):
            up = w[i, j + 1] if i > 0 else 2.0 * w[0, j + 1]
            down = w[i + 2, j + 1] if i < m1 - 1 else 2.0 * w[m1 + 1, j + 1]
            left = w[i + 1, j] if j > 0 else 2.0 * w[i + 1, 0]
            right = w[i + 1, j + 2] if j < m2 - 1 else 2.0 * w[i + 1, m2 + 1]
            out[i, j] = (up - 2.0 * w[i + 1, j + 1] + down) * inv1 + (
                left - 2.0 * w[i + 1, j + 1] + right
            ) * inv2
    return out
