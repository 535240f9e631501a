import os
import subprocess
import sys

import numpy as np
import pytest

from resonlab import _backend, _kernels_py
from resonlab.grids import ball_grid, cylinder_grid

compiled = pytest.importorskip("resonlab._kernels")


def _rand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_block_rows_agree():
    g = cylinder_grid((0.25, 0.5), (-0.25, 0.25), 3, 3, 16)
    args = (g.rho, g.zp, g.mweights, g.n_theta, 2.0 + 0.5j)
    a = compiled.helmholtz3d_block_row(*args)
    b = _kernels_py.helmholtz3d_block_row(*args)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_dense_kernels_agree():
    g = ball_grid(0.5, 3, 3, 8)
    args = (np.ascontiguousarray(g.nodes), g.weights, 1.5 - 0.3j)
    assert np.allclose(compiled.helmholtz3d_dense(*args), _kernels_py.helmholtz3d_dense(*args),
                       rtol=1e-12, atol=1e-14)


def test_line_steps_agree():
    rng = np.random.default_rng(1)
    n = 200
    up, u, v = _rand(rng, n), _rand(rng, n), 1e-3 * _rand(rng, n)
    outs = []
    for mod in (compiled, _kernels_py):
        un = np.zeros(n, complex)
        mod.line_step(up.copy(), u.copy(), un, v, 0.25, 10, 190)
        outs.append(un)
    assert np.allclose(*outs, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("has_src", [False, True])
def test_mode_steps_agree(has_src):
    rng = np.random.default_rng(2)
    nr, nz, h = 20, 41, 0.05
    rho = (np.arange(nr) + 0.5) * h
    cp = (np.arange(nr) + 1.0) / (rho * h * h)
    cm = np.arange(nr) / (rho * h * h)
    inv = 1.0 / (1.0 + 0.01 * 4 / (2 * rho ** 2))
    up, u = _rand(rng, nr, nz), _rand(rng, nr, nz)
    v, src = 1e-3 * _rand(rng, nr, nz), _rand(rng, nr, nz)
    outs = []
    for mod in (compiled, _kernels_py):
        un = np.zeros((nr, nz), complex)
        mod.mode_step(up.copy(), u.copy(), un, v, src, has_src, cp, cm, inv, 1 / h ** 2, 0.01,
                      nr - 2, 3, nz - 3)
        outs.append(un)
    assert np.allclose(*outs, rtol=1e-12, atol=1e-13)


def test_environment_selects_fallback():
    env = dict(os.environ, RESONLAB_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from resonlab import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert _backend.BACKEND in ("python", "cython")
