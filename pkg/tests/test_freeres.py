import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from resonlab.errors import SpectralPointError
from resonlab.freeres import (OperatorCache, SpectralPoint, apply_R0_at, assemble_R0,
                              circulant_to_dense, kernel)
from resonlab.grids import ball_grid, cylinder_grid, line_grid, polar_grid


def ball_constant_oracle(lam, a, r):
    """u = R0(lam) 1_ball, radial: -1/lam^2 + A sin(lam r)/(lam r) inside, B e^{i lam r}/r outside."""
    s = lambda x: np.sin(lam * x) / (lam * x)
    ds = lambda x: (lam * x * np.cos(lam * x) - np.sin(lam * x)) / (lam * x * x)
    out = lambda x: np.exp(1j * lam * x) / x
    dout = lambda x: np.exp(1j * lam * x) * (1j * lam * x - 1) / (x * x)
    M = np.array([[s(a), -out(a)], [ds(a), -dout(a)]])
    A, B = np.linalg.solve(M, [1 / lam ** 2, 0])
    return -1 / lam ** 2 + A * s(r)


def disk_constant_oracle(lam, a, r):
    M = np.array([[special.jv(0, lam * a), -special.hankel1(0, lam * a)],
                  [-special.jv(1, lam * a), special.hankel1(1, lam * a)]])
    A, B = np.linalg.solve(M, [1 / lam ** 2, 0])
    return -1 / lam ** 2 + A * special.jv(0, lam * r)


def segment_constant_oracle(lam, x):
    """(i / 2 lam) int_{-1}^{1} exp(i lam |x - y|) dy, split at x."""
    x = np.asarray(x, dtype=float)
    a = np.clip(x, -1.0, 1.0)
    # part of [-1, 1] left of x, then right of x
    left = (np.exp(1j * lam * (x + 1)) - np.exp(1j * lam * (x - a))) / (1j * lam)
    right = (np.exp(1j * lam * (1 - x)) - np.exp(1j * lam * (a - x))) / (1j * lam)
    return 0.5j / lam * (left + right)


def test_odd_dimension_kernels():
    r = np.array([0.3, 1.7])
    lam = 1.3 - 0.4j
    assert np.allclose(kernel(1, lam, r), 0.5j / lam * np.exp(1j * lam * r))
    assert np.allclose(kernel(3, lam, r), np.exp(1j * lam * r) / (4 * np.pi * r))


def _hankel_on_sheet(lam, r, sheet):
    # H0 from its power series with the logarithm continued to the given sheet
    with mp.workdps(40):
        z = mp.mpc(lam) * r
        j0 = mp.besselj(0, z)
        series = mp.nsum(lambda k: (-1) ** (k + 1) * mp.harmonic(k) * (z / 2) ** (2 * k)
                         / mp.factorial(k) ** 2, [1, mp.inf])
        log = mp.log(mp.mpc(lam) / 2) + mp.log(r) + 2j * mp.pi * sheet
        y0 = 2 / mp.pi * ((log + mp.euler) * j0 + series)
        return complex(0.25j * (j0 + 1j * y0))


@pytest.mark.parametrize("sheet", [-2, -1, 0, 1, 2])
@pytest.mark.parametrize("lam", [1.5 + 0.2j, -0.7 - 0.9j, 0.3j])
def test_two_dimensional_sheets_match_series(lam, sheet):
    for r in (0.05, 0.4, 1.3):
        ref = _hankel_on_sheet(lam, r, sheet)
        assert kernel(2, SpectralPoint(lam, sheet), r) == pytest.approx(ref, rel=1e-12, abs=1e-14)


def test_spectral_point_validation():
    with pytest.raises(SpectralPointError):
        kernel(3, SpectralPoint(1.0, 1), 0.5)
    with pytest.raises(SpectralPointError):
        kernel(2, SpectralPoint(1.0, 3), 0.5)
    with pytest.raises(SpectralPointError):
        kernel(1, 0.0, 0.5)
    with pytest.raises(SpectralPointError):
        kernel(2, 0.0, 0.5)


@pytest.mark.parametrize("lam", [1.0, 2.5 - 0.5j, 0.5 + 1.0j])
def test_line_nystrom_on_constant(lam):
    g = line_grid([-1.0, 1.0], 24, 0.5)
    u = assemble_R0(lam, g).matrix @ np.ones(g.size)
    assert np.allclose(u, segment_constant_oracle(lam, g.nodes[:, 0]), rtol=1e-12, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.3, 6.0), st.floats(-1.0, 1.0))
def test_line_targets_on_constant(x, re, im):
    lam = complex(re, im)
    g = line_grid([-1.0, 1.0], 24, 0.5)
    u = apply_R0_at(lam, g, np.ones(g.size), [x])[0]
    assert u == pytest.approx(segment_constant_oracle(lam, x), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("lam", [1.0, 3.0 - 0.5j, 1.0j])
def test_ball_nystrom_on_constant(lam):
    g = ball_grid(0.5, 12, 12, 16)
    u = assemble_R0(lam, g).matrix @ np.ones(g.size)
    r = np.linalg.norm(g.nodes, axis=1)
    ref = ball_constant_oracle(lam, 0.5, r)
    # the largest errors sit at nodes next to the sphere
    assert np.max(np.abs(u - ref)) / np.max(np.abs(ref)) < 5e-4


@pytest.mark.parametrize("lam", [1.0, 2.0 - 0.5j])
def test_disk_nystrom_on_constant(lam):
    g = polar_grid((0.0, 0.5), 12, 24)
    u = assemble_R0(lam, g).matrix @ np.ones(g.size)
    r = np.linalg.norm(g.nodes, axis=1)
    ref = disk_constant_oracle(lam, 0.5, r)
    assert np.max(np.abs(u - ref)) / np.max(np.abs(ref)) < 1e-4


def test_circulant_matches_dense_blocks():
    g = cylinder_grid((0.25, 0.5), (-0.25, 0.25), 3, 3, 8)
    op = assemble_R0(1.5 - 0.2j, g)
    full = circulant_to_dense(op.circulant)
    x = g.nodes
    r = np.linalg.norm(x[:, None] - x[None, :], axis=-1)
    off = ~np.eye(g.size, dtype=bool)
    direct = kernel(3, 1.5 - 0.2j, np.where(off, r, 1.0)) * g.weights[None, :]
    assert np.allclose(full[off], direct[off], rtol=1e-12)


def test_outgoing_symmetry_for_real_lambda():
    # R0(-lam) = conj(R0(lam)) entrywise for real lam
    g = ball_grid(0.5, 4, 4, 8)
    a = assemble_R0(2.0, g).matrix
    b = assemble_R0(-2.0, g).matrix
    assert np.allclose(b, a.conj(), atol=1e-14)


def test_operator_cache_round_trip(tmp_path):
    g = line_grid([-1.0, 1.0], 8, 1.0)
    cache = OperatorCache(tmp_path, "1.0")
    A = assemble_R0(1.0 + 0.5j, g).matrix
    key = cache.key("spec", g, 1.0 + 0.5j, "free_resolvent")
    assert cache.load(key) is None
    assert cache.store(key, A, 1.0 + 0.5j)
    mat, lam, sheet = cache.load(key)
    assert np.array_equal(mat, A) and lam == 1.0 + 0.5j and sheet == 0
    other = OperatorCache(tmp_path, "1.1")
    assert other.key("spec", g, 1.0 + 0.5j, "free_resolvent") != key
    tiny = OperatorCache(tmp_path, "1.0", max_bytes=16)
    assert not tiny.store(key + "x", A, 1.0)
