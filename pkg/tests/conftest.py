"""Shared fixtures and independent reference implementations.

The reference operators here are deliberately written as plain Python loops
straight from the stencil definition, so they share no code with the package
paths they validate.
"""

import itertools
import math

import numpy as np
import pytest

import plateflow as pf


def bump(amplitude, center, width, offset=0.0):
    return lambda *xs: amplitude * math.exp(
        -sum((x - center) ** 2 for x in xs) / (2.0 * width * width)
    ) + offset


def reference_laplacian(grid, u):
    """Loop-based clamped-plate Laplacian over all nodes (independent route)."""
    shape = grid.extended_shape
    ext = np.zeros(shape)
    ext[(slice(1, -1),) * grid.dim] = np.asarray(u).reshape(grid.interior_shape)
    out = np.zeros(shape)
    for idx in itertools.product(*(range(s) for s in shape)):
        total = 0.0
        for axis, h in enumerate(grid.spacing):
            lo = list(idx)
            hi = list(idx)
            lo[axis] -= 1
            hi[axis] += 1
            vals = []
            for nb in (lo, hi):
                j = nb[axis]
                if 0 <= j < shape[axis]:
                    vals.append(ext[tuple(nb)])
                else:
                    # ghost node: mirror across the wall to the first interior node
                    mirror = list(nb)
                    mirror[axis] = 1 if j < 0 else shape[axis] - 2
                    vals.append(ext[tuple(mirror)])
            total += (vals[0] - 2.0 * ext[idx] + vals[1]) / (h * h)
        out[idx] = total
    return out.ravel()


def golden_section(fun, lo, hi, tol=1e-13):
    """Scalar minimizer for brute-force checks of one-node problems."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > tol * (1.0 + abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def enumerate_qp(Hd, bd, f):
    """Exact small-QP oracle: test every active set for KKT consistency."""
    n = len(bd)
    best = None
    for bits in itertools.product((False, True), repeat=n):
        act = np.array(bits)
        u = np.empty(n)
        u[act] = f[act]
        free = ~act
        if free.any():
            sub = Hd[np.ix_(free, free)]
            rhs = bd[free] - Hd[np.ix_(free, act)] @ f[act]
            try:
                u[free] = np.linalg.solve(sub, rhs)
            except np.linalg.LinAlgError:
                continue
        lam = Hd @ u - bd
        if np.all(u >= f - 1e-9) and np.all(np.where(act, lam, 0.0) >= -1e-7):
            value = 0.5 * u @ Hd @ u - bd @ u
            if best is None or value < best[0]:
                best = (value, u)
    assert best is not None
    return best[1]


def kkt_residuals(grid, u, f, tau, u_prev, multipliers):
    """Scaled KKT components for the step QP with H = qw (B + I/tau)."""
    qw = grid.quad_weight
    H_u = qw * (pf.bilaplacian(grid, u) + u / tau)
    b = qw * u_prev / tau
    scale = 1.0 + float(np.max(np.abs(b))) + float(np.max(np.abs(H_u)))
    stationarity = float(np.max(np.abs(H_u - b - multipliers))) / scale
    negativity = max(0.0, -float(np.min(multipliers))) / scale
    feasibility = max(0.0, float(np.max(f - u))) / (1.0 + float(np.max(np.abs(f))))
    complementarity = float(np.max(np.abs(multipliers * (u - f)))) / scale
    return stationarity, negativity, feasibility, complementarity


def random_problem(rng, max_1d=9, max_2d=5):
    """Random small grid, obstacle with negative boundary, feasible state."""
    if rng.random() < 0.5:
        m = int(rng.integers(1, max_1d + 1))
        grid = pf.build_grid(1, [float(rng.uniform(0.5, 2.0))], [m])
    else:
        m1 = int(rng.integers(1, max_2d + 1))
        m2 = int(rng.integers(1, max_2d + 1))
        grid = pf.build_grid(2, [1.0, float(rng.uniform(0.5, 2.0))], [m1, m2])
    f = rng.uniform(-1.0, 0.8, grid.n_interior)
    u_prev = f + np.abs(rng.normal(0.0, 1.0, grid.n_interior))
    tau = float(10.0 ** rng.uniform(-3.0, 0.5))
    return grid, f, u_prev, tau


@pytest.fixture(scope="session")
def w1_problem():
    grid = pf.build_grid(1, [1.0], [63])
    return grid, pf.build_problem(grid, bump(2, 0.5, 0.1, -0.5), bump(3, 0.5, 0.2))


@pytest.fixture(scope="session")
def w2_problem():
    grid = pf.build_grid(2, [1.0, 1.0], [31, 31])
    return grid, pf.build_problem(grid, bump(2, 0.5, 0.1, -0.5), bump(3, 0.5, 0.2))


@pytest.fixture(scope="session")
def w1_trajectory(w1_problem):
    _, problem = w1_problem
    return pf.run_flow(problem, 0.5, 64, pf.StepConfig(tau=1.0))


@pytest.fixture(scope="session")
def w2_trajectory(w2_problem):
    _, problem = w2_problem
    return pf.run_flow(problem, 0.5, 64, pf.StepConfig(tau=1.0))
