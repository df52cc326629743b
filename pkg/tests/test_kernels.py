"""Both kernel backends against each other and against the loop reference."""

import numpy as np
import pytest

import plateflow as pf
from plateflow import _kernels_numpy as knp
from plateflow.linalg import bilaplacian_matrix, laplacian_matrix

from conftest import reference_laplacian

numba_kernels = pytest.importorskip("plateflow._kernels_numba")

CASES = [
    pf.build_grid(1, [1.0], [1]),
    pf.build_grid(1, [2.0], [7]),
    pf.build_grid(1, [1.0], [64]),
    pf.build_grid(2, [1.0, 1.0], [1, 1]),
    pf.build_grid(2, [1.0, 1.5], [4, 3]),
    pf.build_grid(2, [2.0, 1.0], [9, 13]),
]


def _apply(mod, grid, u):
    if grid.dim == 1:
        return mod.laplacian_1d(u, grid.spacing[0])
    return mod.laplacian_2d(u.reshape(grid.interior_shape), *grid.spacing).ravel()


def _apply_adjoint(mod, grid, w):
    if grid.dim == 1:
        return mod.laplacian_adjoint_1d(w, grid.spacing[0])
    return mod.laplacian_adjoint_2d(w.reshape(grid.extended_shape), *grid.spacing).ravel()


@pytest.mark.parametrize("grid", CASES, ids=lambda g: f"{g.dim}d{g.interior_counts}")
def test_backends_agree(grid):
    rng = np.random.default_rng(7)
    u = rng.normal(size=grid.n_interior)
    w = rng.normal(size=grid.n_extended)
    np.testing.assert_allclose(
        _apply(numba_kernels, grid, u), _apply(knp, grid, u), rtol=1e-13, atol=1e-13
    )
    np.testing.assert_allclose(
        _apply_adjoint(numba_kernels, grid, w),
        _apply_adjoint(knp, grid, w),
        rtol=1e-13,
        atol=1e-13,
    )


@pytest.mark.parametrize("grid", CASES, ids=lambda g: f"{g.dim}d{g.interior_counts}")
def test_matches_loop_reference(grid):
    rng = np.random.default_rng(11)
    u = rng.normal(size=grid.n_interior)
    expected = reference_laplacian(grid, u)
    np.testing.assert_allclose(pf.extended_laplacian(grid, u), expected, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("grid", CASES, ids=lambda g: f"{g.dim}d{g.interior_counts}")
def test_adjoint_identity(grid):
    rng = np.random.default_rng(3)
    u = rng.normal(size=grid.n_interior)
    w = rng.normal(size=grid.n_extended)
    lhs = float(np.dot(pf.extended_laplacian(grid, u), w))
    rhs = float(np.dot(u, pf.laplacian_adjoint(grid, w)))
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("grid", CASES, ids=lambda g: f"{g.dim}d{g.interior_counts}")
def test_sparse_assembly_matches_kernels(grid):
    rng = np.random.default_rng(5)
    u = rng.normal(size=grid.n_interior)
    lap = laplacian_matrix(grid)
    np.testing.assert_allclose(lap @ u, pf.extended_laplacian(grid, u), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(
        bilaplacian_matrix(grid) @ u, pf.bilaplacian(grid, u),
        rtol=1e-11, atol=1e-11 * float(np.max(np.abs(pf.bilaplacian(grid, u))) + 1),
    )


def test_backend_name_reported():
    assert pf.kernels.backend_name() in ("numba", "numpy")
