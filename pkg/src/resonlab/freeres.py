"""Free resolvent kernels and their Nystrom discretization.

Conventions: ``Delta`` is the non-negative Laplacian and
``R0(lam) = (Delta - lam^2)^{-1}`` is analytic in the upper half plane,
continued from there.  The kernels are

* d = 1: ``(i / (2 lam)) exp(i lam r)``
* d = 2: ``(i/4) H0(lam r)`` on the logarithmic cover; on sheet ``k`` the
  logarithm is advanced by ``2 pi i k`` which turns the kernel into
  ``(i/4) H0(lam r) - i k J0(lam r)``
* d = 3: ``exp(i lam r) / (4 pi r)``

Sheet 0 is the principal branch ``arg lam in (-pi, pi]``.
"""
from __future__ import annotations

import hashlib
import io
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from . import _backend
from .errors import SpectralPointError
from .grids import AxisymmetricGrid, LineGrid, QuadratureGrid, boundary_quadrature

__all__ = [
    "SpectralPoint", "NystromOperator", "kernel", "assemble_R0", "operator_norm",
    "apply_R0_at", "static_diagonal", "volume_potential", "OperatorCache", "MAX_SHEETS",
]

MAX_SHEETS = 2
FREE_RESOLVENT = "free_resolvent"
BIRMAN_SCHWINGER = "birman_schwinger"


@dataclass(frozen=True)
class SpectralPoint:
    lam: complex
    sheet: int = 0

    def validate(self, d, max_sheets=MAX_SHEETS):
        if d in (1, 3) and self.sheet != 0:
            raise SpectralPointError(f"sheet must be 0 in odd dimension, got {self.sheet}")
        if d == 2:
            if abs(self.sheet) > max_sheets:
                raise SpectralPointError(f"|sheet| = {abs(self.sheet)} exceeds max_sheets = {max_sheets}")
            if self.lam == 0:
                raise SpectralPointError("lambda = 0 is excluded in dimension 2")
        if d == 1 and self.lam == 0:
            raise SpectralPointError("the one-dimensional free resolvent has a pole at lambda = 0")
        return self

    def negated(self):
        return SpectralPoint(-complex(self.lam), self.sheet)


def as_point(sp):
    return sp if isinstance(sp, SpectralPoint) else SpectralPoint(complex(sp))


def _log_on_sheet(z, sheet):
    return np.log(z) + 2j * np.pi * sheet


def kernel(d, sp, r, max_sheets=MAX_SHEETS):
    """Free resolvent kernel at separation ``r`` (array-valued)."""
    sp = as_point(sp)
    lam = complex(sp.lam)
    if d == 2:
        sp.validate(2, max_sheets)
    elif d in (1, 3):
        if sp.sheet != 0:
            raise SpectralPointError("sheet must be 0 in odd dimension")
    else:
        raise ValueError("dimension must be 1, 2 or 3")
    r = np.asarray(r, dtype=float)
    if d == 1:
        if lam == 0:
            raise SpectralPointError("the one-dimensional free resolvent has a pole at lambda = 0")
        return 1j / (2 * lam) * np.exp(1j * lam * r)
    if d == 3:
        return np.exp(1j * lam * r) / (4 * np.pi * r)
    z = lam * r
    val = 0.25j * special.hankel1(0, z)
    if sp.sheet:
        val = val - 1j * sp.sheet * special.jv(0, z)
    return val


def _regular_at_zero(d, sp):
    """Limit of kernel minus its static part as r -> 0."""
    lam = complex(sp.lam)
    if d == 3:
        return 1j * lam / (4 * np.pi)
    return 0.25j - (_log_on_sheet(lam / 2, sp.sheet) + np.euler_gamma) / (2 * np.pi)


def static_kernel(d, r):
    """Singular static part: ``1/(4 pi r)`` (d = 3) or ``-log(r)/(2 pi)`` (d = 2)."""
    r = np.asarray(r, dtype=float)
    if d == 3:
        return 1.0 / (4 * np.pi * r)
    return -np.log(r) / (2 * np.pi)


def volume_potential(region, targets, nq=96):
    """Exact-to-quadrature ``int_region static_kernel(|x - y|) dy`` at interior targets.

    Uses the divergence theorem so the integrand is bounded: in 3D
    ``div_y((y-x)/|y-x|) = 2/|y-x|``; in 2D
    ``div_y((y-x)(log|y-x| - 1/2)) = 2 log|y-x|``.
    """
    pts, nrm, w = boundary_quadrature(region, nq)
    targets = np.atleast_2d(targets)
    out = np.empty(targets.shape[0])
    for i0 in range(0, targets.shape[0], 64):
        x = targets[i0:i0 + 64]
        diff = pts[None, :, :] - x[:, None, :]
        r = np.sqrt(np.sum(diff * diff, axis=-1))
        flux = np.sum(diff * nrm[None], axis=-1)
        if targets.shape[1] == 3:
            out[i0:i0 + 64] = (flux / r) @ w / (8 * np.pi)
        else:
            out[i0:i0 + 64] = -(flux * (np.log(r) - 0.5)) @ w / (4 * np.pi)
    return out


def static_diagonal(grid, nq=96):
    """Lambda-independent part of the singularity-subtracted diagonal.

    For node ``j`` this is ``S_j - sum_{k != j} w_k s(|x_j - x_k|)`` with
    ``S_j`` the exact volume potential of the covered region and ``s`` the
    static kernel.  The full diagonal adds ``w_j`` times the regular part of
    the kernel at ``r = 0``, so that each matrix row integrates constants
    exactly over the region.
    """
    key = ("static_diagonal", nq)
    if key in grid.memo:
        return grid.memo[key]
    d = grid.dimension
    if isinstance(grid, AxisymmetricGrid):
        M = grid.n_meridional
        targets = grid.nodes[:M]
        if d == 3:
            G0 = _backend.helmholtz3d_block_row(grid.rho, grid.zp, grid.mweights, grid.n_theta, 0j).real
        else:
            G0 = _polar_block_row(grid, lambda r: static_kernel(2, r))
        rowsum = G0.sum(axis=(0, 2))
        out = volume_potential(grid.region, targets, nq) - rowsum
    else:
        diff = grid.nodes[:, None, :] - grid.nodes[None, :, :]
        r = np.sqrt(np.sum(diff * diff, axis=-1))
        np.fill_diagonal(r, 1.0)
        S = static_kernel(d, r) * grid.weights[None, :]
        np.fill_diagonal(S, 0.0)
        out = volume_potential(grid.region, grid.nodes, nq) - S.sum(axis=1)
    grid.memo[key] = out
    return out


def _polar_block_row(grid, fn):
    """``fn(r) * w_b * h_theta`` on a d = 2 axisymmetric grid, zero self term."""
    M = grid.n_meridional
    th = grid.theta
    r = np.sqrt(np.maximum(grid.rho[:, None] ** 2 + grid.rho[None, :] ** 2
                           - 2 * np.cos(th)[:, None, None] * np.outer(grid.rho, grid.rho)[None], 0.0))
    r[0][np.diag_indices(M)] = 1.0
    G = fn(r) * (grid.mweights * grid.h_theta)[None, None, :]
    G[0][np.diag_indices(M)] = 0.0
    return G


@dataclass(frozen=True, eq=False)
class NystromOperator:
    """Dense matrix acting on nodal values of ``grid``.

    ``circulant`` holds the first block row ``G[s]`` when the grid is
    axisymmetric and the operator commutes with rotations, so that the full
    matrix has blocks ``A[p, q] = G[(q - p) mod n_theta]``.  ``potential``
    holds V at the nodes for Birman-Schwinger operators.
    """

    grid: QuadratureGrid
    lambda_point: SpectralPoint
    role: str
    matrix_: np.ndarray = None
    circulant: np.ndarray = None
    potential: np.ndarray = None
    free: "NystromOperator" = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def matrix(self):
        if self.matrix_ is not None:
            return self.matrix_
        if "full" not in self._cache:
            full = circulant_to_dense(self.circulant)
            if self.potential is not None:
                full *= self.potential[:, None]
            self._cache["full"] = full
        return self._cache["full"]

    @property
    def size(self):
        return self.grid.size

    def scaled_rows(self, v):
        """Birman-Schwinger operator ``diag(v) @ self`` sharing structure."""
        if self.role != FREE_RESOLVENT:
            raise ValueError("rows can only be scaled on a free resolvent")
        v = np.asarray(v, dtype=complex)
        if self.circulant is not None:
            return NystromOperator(self.grid, self.lambda_point, BIRMAN_SCHWINGER,
                                   circulant=self.circulant, potential=v, free=self)
        return NystromOperator(self.grid, self.lambda_point, BIRMAN_SCHWINGER,
                               matrix_=v[:, None] * self.matrix, potential=v, free=self)


def circulant_to_dense(G):
    n, M, _ = G.shape
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return np.ascontiguousarray(G[idx].transpose(0, 2, 1, 3).reshape(n * M, n * M))


# --------------------------------------------------------------------------
# assembly

def _line_matrix(lam, grid):
    x = grid.nodes[:, 0]
    w = grid.weights
    n = grid.n_per_panel
    # far interactions are smooth: plain quadrature
    A = np.exp(1j * lam * np.abs(x[:, None] - x[None, :])) * w[None, :]
    for p in range(grid.n_panels):
        sl = grid.panel_slice(p)
        half = 0.5 * (grid.breakpoints[p + 1] - grid.breakpoints[p])
        Q = grid.ref_cumulative * half
        xs = x[sl]
        # left part: int_a^x e^{i lam (x - y)} f(y) dy, right part: int_x^b e^{i lam (y - x)} f(y) dy
        left = Q * np.exp(1j * lam * (xs[:, None] - xs[None, :]))
        right = (w[sl][None, :] - Q) * np.exp(1j * lam * (xs[None, :] - xs[:, None]))
        A[sl, sl] = left + right
    return (0.5j / lam) * A


def _axisym_block_row(sp, grid):
    d = grid.dimension
    lam = complex(sp.lam)
    n, M = grid.n_theta, grid.n_meridional
    if d == 3:
        G = _backend.helmholtz3d_block_row(grid.rho, grid.zp, grid.mweights, n, lam)
    else:
        G = _polar_block_row(grid, lambda r: kernel(2, sp, r))
    G[0][np.diag_indices(M)] = static_diagonal(grid) + grid.weights[:M] * _regular_at_zero(d, sp)
    return G


def assemble_R0(sp, grid, max_sheets=MAX_SHEETS):
    """Nystrom matrix of ``chi R0(lam) chi`` on ``grid`` (cutoff on both sides).

    Entries are ``w_k R0(lam; x_j, x_k)``.  In d = 2, 3 the diagonal comes
    from singularity subtraction against the exact volume potential of the
    covered region; in d = 1 the kinked kernel is product-integrated on the
    Chebyshev panels.
    """
    sp = as_point(sp)
    d = grid.dimension
    sp.validate(d, max_sheets)
    if grid.size == 0:
        raise ValueError("empty grid")
    chi = grid.cutoff
    if isinstance(grid, LineGrid):
        A = _line_matrix(complex(sp.lam), grid)
        return NystromOperator(grid, sp, FREE_RESOLVENT, matrix_=chi[:, None] * A * chi[None, :])
    if isinstance(grid, AxisymmetricGrid) and np.all(chi == 1.0):
        G = _axisym_block_row(sp, grid)
        return NystromOperator(grid, sp, FREE_RESOLVENT, circulant=G)
    if isinstance(grid, AxisymmetricGrid):
        G = _axisym_block_row(sp, grid)
        A = circulant_to_dense(G)
    else:
        A = _dense_matrix(sp, grid)
    return NystromOperator(grid, sp, FREE_RESOLVENT, matrix_=chi[:, None] * A * chi[None, :])


def _dense_matrix(sp, grid):
    d = grid.dimension
    lam = complex(sp.lam)
    if d == 3:
        A = _backend.helmholtz3d_dense(np.ascontiguousarray(grid.nodes), grid.weights, lam)
    else:
        diff = grid.nodes[:, None, :] - grid.nodes[None, :, :]
        r = np.sqrt(np.sum(diff ** 2, axis=-1))
        np.fill_diagonal(r, 1.0)
        A = kernel(d, sp, r) * grid.weights[None, :]
    np.fill_diagonal(A, static_diagonal(grid) + grid.weights * _regular_at_zero(d, sp))
    return A


def apply_R0_at(sp, grid, f, targets):
    """``(R0 f)(x)`` at arbitrary targets for a field ``f`` on ``grid``.

    Uses product integration in d = 1 (exact for the panel interpolant of
    ``f``); elsewhere plain quadrature, accurate for targets away from nodes.
    """
    sp = as_point(sp)
    lam = complex(sp.lam)
    f = np.asarray(f, dtype=complex)
    if isinstance(grid, LineGrid):
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        x = grid.nodes[:, 0]
        w = grid.weights
        out = np.empty(targets.size, dtype=complex)
        inside = grid.locate(targets) >= 0
        # plain quadrature is exact up to interpolation away from the target's panel
        far = np.exp(1j * lam * np.abs(targets[:, None] - x[None, :])) * w[None, :]
        out[:] = far @ f
        if np.any(inside):
            ti = targets[inside]
            key = ("target_rows", ti.tobytes())
            if key not in grid.memo:
                grid.memo[key] = grid.target_rows(ti)
            pan, _, cumul = grid.memo[key]
            n = grid.n_per_panel
            corr = np.empty(ti.size, dtype=complex)
            for i, (p, xt) in enumerate(zip(pan, ti)):
                sl = grid.panel_slice(p)
                xs, fs, ws = x[sl], f[sl], w[sl]
                left = cumul[i] * np.exp(1j * lam * (xt - xs))
                right = (ws - cumul[i]) * np.exp(1j * lam * (xs - xt))
                naive = ws * np.exp(1j * lam * np.abs(xt - xs))
                corr[i] = np.dot(left + right - naive, fs)
            out[inside] += corr
        return (0.5j / lam) * out
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    diff = targets[:, None, :] - grid.nodes[None, :, :]
    r = np.sqrt(np.sum(diff ** 2, axis=-1))
    return (kernel(grid.dimension, sp, r) * grid.weights[None, :]) @ f


def operator_norm(op):
    """L2 operator norm: largest singular value of ``W^(1/2) A W^(-1/2)``."""
    w = op.grid.weights
    sw = np.sqrt(w)
    A = op.matrix
    if not np.any(A):
        return 0.0
    B = sw[:, None] * A / sw[None, :]
    return float(np.linalg.norm(B, 2))


# --------------------------------------------------------------------------
# disk cache

class OperatorCache:
    """Directory of cached dense matrices.

    File layout (little endian): magic ``b'RLOP'``, format version (u32),
    ``N`` (i64), ``Re lam``, ``Im lam`` (f64), ``sheet`` (i64), then ``N*N``
    complex doubles in row-major order.  File names are the sha256 of
    (code version, spec text, grid key, lam, sheet, role).
    """

    MAGIC = b"RLOP"
    FORMAT = 1

    def __init__(self, root, version, max_bytes=256 * 2 ** 20):
        self.root = Path(root)
        self.version = str(version)
        self.max_bytes = int(max_bytes)
        self.hits = 0
        self.misses = 0

    def key(self, spec_text, grid, sp, role):
        sp = as_point(sp)
        lam = complex(sp.lam)
        doc = "|".join([self.version, spec_text, grid.key(), repr(lam.real), repr(lam.imag),
                        str(sp.sheet), role])
        return hashlib.sha256(doc.encode()).hexdigest()

    def path(self, key):
        return self.root / key[:2] / f"{key}.bin"

    def load(self, key):
        p = self.path(key)
        if not p.exists():
            self.misses += 1
            return None
        raw = p.read_bytes()
        if raw[:4] != self.MAGIC:
            self.misses += 1
            return None
        fmt, N, re, im, sheet = struct.unpack_from("<Iqddq", raw, 4)
        off = 4 + struct.calcsize("<Iqddq")
        mat = np.frombuffer(raw, dtype="<c16", count=N * N, offset=off).reshape(N, N)
        self.hits += 1
        return mat.astype(complex), complex(re, im), sheet

    def store(self, key, matrix, sp):
        sp = as_point(sp)
        matrix = np.ascontiguousarray(matrix, dtype="<c16")
        if matrix.nbytes > self.max_bytes:
            return False
        p = self.path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        buf = io.BytesIO()
        lam = complex(sp.lam)
        buf.write(self.MAGIC)
        buf.write(struct.pack("<Iqddq", self.FORMAT, matrix.shape[0], lam.real, lam.imag, sp.sheet))
        buf.write(matrix.tobytes())
        tmp = p.with_suffix(".tmp")
        tmp.write_bytes(buf.getvalue())
        os.replace(tmp, p)
        return True
