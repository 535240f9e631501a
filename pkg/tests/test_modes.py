import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonlab.birman import determinant_function
from resonlab.errors import AliasRisk
from resonlab.grids import ball_grid, cylinder_grid
from resonlab.modes import (mode_block_matrix, mode_grid, mode_norm_estimate, project_mode,
                            triangularity_defect)
from resonlab.potentials import Bump, PotentialSpec, SeparableAngular


@settings(max_examples=20, deadline=None)
@given(st.integers(-5, 5), st.integers(0, 2 ** 31))
def test_projection_is_idempotent_and_orthogonal(j, seed):
    g = cylinder_grid((0.2, 0.5), (-0.2, 0.2), 2, 2, 32)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=g.size) + 1j * rng.normal(size=g.size)
    p = project_mode(f, g, j)
    assert np.allclose(project_mode(p, g, j), p)
    assert np.allclose(project_mode(p, g, j + 1), 0, atol=1e-12)


def test_projection_guards_against_aliasing():
    g = cylinder_grid((0.2, 0.5), (-0.2, 0.2), 2, 2, 16)
    with pytest.raises(AliasRisk):
        project_mode(np.ones(g.size), g, 3)


def test_fourier_and_dense_blocks_agree(separable):
    g = mode_grid(separable, 4, {"n_rho": 3, "n_z": 3})
    a = mode_block_matrix(separable, 1.5 - 0.5j, 4, g, "fourier")
    b = mode_block_matrix(separable, 1.5 - 0.5j, 4, g, "dense")
    assert np.allclose(a.blocks, b.blocks, atol=1e-14)


def test_full_mode_set_reproduces_the_grid_determinant(radial_control):
    # with every discrete mode kept the block determinant is the grid determinant
    J = 6
    g = ball_grid(0.5, 4, 4, 2 * J + 1)
    mb = mode_block_matrix(radial_control, 2.0 - 0.5j, J, g, check_alias=False)
    ref = determinant_function(radial_control, g, entire=False)(2.0 - 0.5j)
    d = mb.logdet() - ref
    assert abs(d.real) < 1e-10
    assert abs((d.imag + np.pi) % (2 * np.pi) - np.pi) < 1e-10


def test_separable_blocks_sit_on_the_shifted_diagonal(separable):
    mb = mode_block_matrix(separable, 2.0, 8)
    assert triangularity_defect(mb) < 1e-13
    norms = mb.block_norms()
    assert norms[1 + 8, 0 + 8] > 1e-3  # mode 0 feeds mode 1


def test_radial_blocks_are_diagonal(radial_control):
    mb = mode_block_matrix(radial_control, 2.0, 4)
    norms = mb.block_norms()
    assert np.allclose(norms - np.diag(np.diag(norms)), 0, atol=1e-13 * norms.max())


def test_radial_and_compressed_mode_norms_agree():
    for j in (1, 2, 3):
        a = mode_norm_estimate(1j, j, method="radial")
        b = mode_norm_estimate(1j, j, method="compressed")
        assert a == pytest.approx(b, rel=1e-2)


def test_radial_mode_norm_converges_under_refinement():
    vals = [mode_norm_estimate(1j, 8, n_radial=n) for n in (1000, 2000, 4000)]
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert abs(vals[2] - vals[1]) < 1e-3 * vals[2]


def test_mode_norm_decreases_into_the_upper_half_plane():
    assert mode_norm_estimate(2j, 5) < mode_norm_estimate(1j, 5)


def test_two_dimensional_mode_norms_agree():
    a = mode_norm_estimate(1j, 4, dimension=2, method="radial")
    b = mode_norm_estimate(1j, 4, dimension=2, method="compressed")
    assert a == pytest.approx(b, rel=1e-2)


def test_mode_zero_is_rejected():
    with pytest.raises(ValueError):
        mode_norm_estimate(1j, 0)
