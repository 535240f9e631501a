"""Angular Fourier modes: projections, mode blocks of K(lam) and the decay
of the free resolvent restricted to a single angular mode."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse, special
from scipy.sparse import linalg as splinalg

from .birman import _logdet_dense, mode_blocks, potential_on_grid
from .errors import AliasRisk
from .freeres import as_point, assemble_R0
from .grids import AxisymmetricGrid, ball_grid, cylinder_grid, polar_grid
from .potentials import Radial, SeparableAngular

__all__ = ["project_mode", "min_theta_points", "ModeBlockMatrix", "mode_block_matrix",
           "triangularity_defect", "mode_norm_estimate", "write_mode_norms_csv", "mode_grid"]


def min_theta_points(j):
    return 4 * abs(int(j)) + 8


def _check_alias(n_theta, j):
    if n_theta < min_theta_points(j):
        raise AliasRisk(f"mode {j} needs at least {min_theta_points(j)} angles, grid has {n_theta}")


def project_mode(f, grid, j):
    """``P_j f``: the ``exp(i j theta)`` component of a nodal field.

    ``f`` is flat in node order (angle major) or already shaped
    ``(n_theta, M)``; the result has the same shape.
    """
    n = grid.n_theta
    _check_alias(n, j)
    f = np.asarray(f)
    F = f.reshape(n, -1)
    phase = np.exp(1j * j * grid.theta)
    coef = (phase.conj() @ F) / n
    return (phase[:, None] * coef[None, :]).reshape(f.shape)


def mode_grid(spec, J, resolution=None):
    """Axisymmetric grid resolving modes up to ``J`` for a d = 3 (or 2) spec."""
    res = dict(resolution or {})
    n_theta = res.pop("n_theta", None) or min_theta_points(J)
    n_theta += n_theta % 2
    k = spec.kind
    if isinstance(k, SeparableAngular):
        lo, hi = max(0.0, k.v1.support[0]), k.v1.support[1]
        if spec.dimension == 2:
            return polar_grid((lo, hi), res.get("n_rho", 8), n_theta)
        return cylinder_grid((lo, hi), k.v2.support, res.get("n_rho", 6), res.get("n_z", 6), n_theta)
    if isinstance(k, Radial):
        lo, hi = k.profile.support
        if spec.dimension == 2:
            return polar_grid((max(lo, 0.0), hi), res.get("n_rho", 10), n_theta)
        return ball_grid(hi, res.get("n_r", 10), res.get("n_polar", 10), n_theta, inner=max(lo, 0.0))
    raise ValueError("mode blocks need a separable or radial potential")


@dataclass(frozen=True)
class ModeBlockMatrix:
    """Blocks ``P_j' K P_j`` for ``-J <= j, j' <= J``; ``blocks[j' + J, j + J]``."""

    J: int
    blocks: np.ndarray
    lambda_point: object
    spec: object
    shift: int

    @property
    def modes(self):
        return np.arange(-self.J, self.J + 1)

    def block(self, jp, j):
        return self.blocks[jp + self.J, j + self.J]

    def block_norms(self):
        return np.linalg.norm(self.blocks, ord=2, axis=(2, 3))

    def dense(self):
        nb, _, M, _ = self.blocks.shape
        return self.blocks.transpose(0, 2, 1, 3).reshape(nb * M, nb * M)

    def logdet(self):
        """``log det(I + blocks)``."""
        A = self.dense()
        return _logdet_dense(np.eye(A.shape[0]) + A)

    def det(self):
        return complex(np.exp(self.logdet()))


def mode_block_matrix(spec, sp, J=None, grid=None, method="fourier", check_alias=True):
    """Compressions ``P_j' K(lam) P_j`` on an axisymmetric grid.

    ``method="fourier"`` reads them off the angular FFT of the circulant
    free resolvent and of V; ``method="dense"`` compresses the assembled
    full-grid matrix against the discrete Fourier vectors.  Both give the
    same blocks up to roundoff.  With ``check_alias=False`` and
    ``n_theta = 2 J + 1`` the blocks cover every discrete mode, so their
    determinant reproduces the full-grid determinant.
    """
    sp = as_point(sp)
    kind = spec.kind
    shift = kind.m if isinstance(kind, SeparableAngular) else 0
    if J is None:
        J = 4 * abs(shift) + 16
    grid = mode_grid(spec, J) if grid is None else grid
    if not isinstance(grid, AxisymmetricGrid):
        raise ValueError("mode blocks need an axisymmetric grid")
    if check_alias:
        _check_alias(grid.n_theta, J)
    n, M = grid.n_theta, grid.n_meridional
    modes = np.arange(-J, J + 1)
    v = potential_on_grid(spec, grid)
    R0 = assemble_R0(sp, grid)
    if method == "fourier":
        Rh = mode_blocks(R0.circulant)
        vh = np.fft.fft(grid.as_modes(v), axis=0) / n
        blocks = (vh[(modes[:, None] - modes[None, :]) % n][:, :, :, None]
                  * Rh[modes % n][None, :, :, :])
    elif method == "dense":
        K = (v[:, None] * R0.matrix).reshape(n, M, n, M)
        E = np.exp(1j * np.outer(grid.theta, modes))
        blocks = np.einsum("pi,paqb,qj->ijab", E.conj(), K, E, optimize=True) / n
    else:
        raise ValueError(f"unknown method {method!r}")
    return ModeBlockMatrix(int(J), np.ascontiguousarray(blocks), sp, spec, int(shift))


def triangularity_defect(mb):
    """Largest block norm off the ``(j + m, j)`` pattern over the largest block norm."""
    norms = mb.block_norms()
    top = norms.max()
    if top == 0:
        return 0.0
    jp = mb.modes[:, None]
    j = mb.modes[None, :]
    off = norms[jp != j + mb.shift]
    return float(off.max() / top) if off.size else 0.0


# --------------------------------------------------------------------------
# single-mode resolvent norms

def _outgoing_log_derivative(lam, order, R):
    """``w'/w`` at ``R`` for ``w = sqrt(r) H_order(lam r)``."""
    z = lam * R
    h0 = special.hankel1e(order, z)
    hm = special.hankel1e(order - 1, z)
    return 1.0 / (2 * R) + lam * (hm / h0 - order / z)


def _radial_sigma_min(lam, order, R, n):
    """Smallest singular value of the reduced radial operator on ``[0, R]``.

    ``w = r^((d-1)/2) u`` turns the mode operator into
    ``-w'' + (order^2 - 1/4) w / r^2 - lam^2 w`` with ``w(0) = 0`` and the
    outgoing Robin condition at ``R``; the norm of ``chi R0 chi`` on that
    mode is the reciprocal of the returned value.
    """
    h = R / n
    r = h * np.arange(1, n + 1)
    c = order * order - 0.25
    beta = _outgoing_log_derivative(lam, order, R)
    main = 2.0 / h ** 2 + c / r ** 2 - lam * lam + 0j
    off = -np.ones(n - 1) / h ** 2 + 0j
    # ghost node from the Robin condition; the half weight below restores symmetry
    main[-1] -= 2 * beta / h
    wts = np.full(n, h)
    wts[-1] = 0.5 * h
    S = sparse.diags([off * h, main * wts, off * h], [-1, 0, 1], format="csc")
    s = 1.0 / np.sqrt(wts)
    B = sparse.diags(s) @ S @ sparse.diags(s)
    B = B.tocsc()
    lu = splinalg.splu(B)
    luh = splinalg.splu(B.conj().T.tocsc())
    x = np.ones(n, dtype=complex) / np.sqrt(n)
    mu = 0.0
    for _ in range(200):
        y = luh.solve(lu.solve(x))
        nrm = np.linalg.norm(y)
        x = y / nrm
        if abs(nrm - mu) <= 1e-13 * nrm:
            break
        mu = nrm
    return 1.0 / np.sqrt(nrm)


def mode_norm_estimate(sp, j, cutoff=1.0, dimension=3, method="radial", n_radial=4000,
                       extra_orders=8, grid=None):
    """``||chi R0(lam) P_j chi||`` with ``chi`` the indicator of a ball.

    ``cutoff`` is the ball radius.  ``method="radial"`` reduces the mode
    further to radial ODEs (orders ``l >= |j|`` in d = 3, order ``|j|`` in
    d = 2) solved by finite differences with ``n_radial`` points;
    ``method="compressed"`` uses the angular Fourier block of the Nystrom
    matrix on ``grid`` (a ball or disk grid whose angular resolution must
    cover ``j``).
    """
    sp = as_point(sp)
    lam = complex(sp.lam)
    j = int(j)
    if j == 0:
        raise ValueError("mode norms are defined for |j| >= 1")
    R = float(cutoff)
    if method == "radial":
        if dimension == 3:
            orders = [l + 0.5 for l in range(abs(j), abs(j) + extra_orders + 1)]
        elif dimension == 2:
            orders = [float(abs(j))]
        else:
            raise ValueError("dimension must be 2 or 3")
        return max(1.0 / _radial_sigma_min(lam, nu, R, n_radial) for nu in orders)
    if method == "compressed":
        if grid is None:
            grid = (ball_grid(R, 16, 24, min_theta_points(j)) if dimension == 3
                    else polar_grid((0.0, R), 24, min_theta_points(j)))
        _check_alias(grid.n_theta, j)
        Rh = mode_blocks(assemble_R0(sp, grid).circulant)[j % grid.n_theta]
        sw = np.sqrt(grid.mweights)
        return float(np.linalg.norm(sw[:, None] * Rh / sw[None, :], 2))
    raise ValueError(f"unknown method {method!r}")


def write_mode_norms_csv(path, rows):
    """Rows of ``(j, norm, lam)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "norm", "lambda_re", "lambda_im"])
        for j, nrm, lam in rows:
            lam = complex(lam)
            w.writerow([int(j), format(float(nrm), ".17g"), format(lam.real, ".17g"),
                        format(lam.imag, ".17g")])
