"""Birman-Schwinger operator, Fredholm determinant, perturbed resolvent and
resonance search.

``K(lam) = V R0(lam)`` is discretized as ``diag(V(x_j)) A`` with ``A`` the
Nystrom matrix of the free resolvent.  Resonances are the zeros of
``det(I + K(lam))``; in one dimension the free resolvent has a simple pole
at the origin, so the zero search works with ``lam * det(I + K(lam))``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .contour import Region, find_zeros
from .errors import NearSingular, RegionInsufficient
from .freeres import (BIRMAN_SCHWINGER, FREE_RESOLVENT, NystromOperator, SpectralPoint, apply_R0_at,
                      as_point, assemble_R0)
from .grids import AxisymmetricGrid, default_grid
from .potentials import dump_spec, eval_cylindrical, eval_potential

__all__ = [
    "potential_on_grid", "assemble_K", "fredholm_det", "fredholm_logdet", "resolve",
    "resolve_at", "neumann_resolve", "determinant_function", "locate_zeros",
    "eigenvalue_scan", "counting_function", "Resonance", "ResonanceSet", "det_scan",
    "write_detscan_csv", "write_resonances_csv", "NEAR_SINGULAR_TOL", "free_operator",
]

NEAR_SINGULAR_TOL = 1e-10


def potential_on_grid(spec, grid):
    """V at the grid nodes (flat, in node order)."""
    if isinstance(grid, AxisymmetricGrid) and spec.dimension == grid.dimension:
        n, M = grid.n_theta, grid.n_meridional
        rho = np.broadcast_to(grid.rho, (n, M))
        th = np.broadcast_to(grid.theta[:, None], (n, M))
        zp = np.broadcast_to(grid.zp, (n, M))
        return eval_cylindrical(spec, rho, th, zp).ravel()
    return eval_potential(spec, grid.nodes)


def assemble_K(spec, sp, grid=None, free=None):
    """Birman-Schwinger operator ``V R0(lam)`` on ``grid``.

    ``free`` may pass an already assembled free resolvent on the same grid.
    """
    sp = as_point(sp)
    grid = default_grid(spec) if grid is None else grid
    if spec.dimension != grid.dimension:
        raise ValueError("grid dimension does not match the potential")
    v = potential_on_grid(spec, grid)
    if np.any((v != 0) & (grid.cutoff != 1.0)):
        raise ValueError("cutoff must equal 1 wherever V is nonzero")
    R0 = assemble_R0(sp, grid) if free is None else free
    return R0.scaled_rows(v)


# --------------------------------------------------------------------------
# determinants

def _angular_harmonics(v, grid, rel=1e-13):
    """Single angular harmonic ``(m, profile)`` of ``v`` or ``None``."""
    V = grid.as_modes(v)
    n = grid.n_theta
    vh = np.fft.fft(V, axis=0) / n
    norms = np.max(np.abs(vh), axis=1)
    top = norms.max()
    if top == 0:
        return 0, np.zeros(grid.n_meridional, dtype=complex)
    live = np.flatnonzero(norms > rel * top)
    if live.size != 1:
        return None
    return int(live[0]), vh[live[0]]


def mode_blocks(G):
    """``Ghat[j] = sum_s G[s] exp(2 pi i j s / n)``: the free resolvent on mode ``j``."""
    n = G.shape[0]
    return np.fft.ifft(G, axis=0) * n


def _logdet_dense(M):
    lu, piv = linalg.lu_factor(M, check_finite=False)
    diag = np.diag(lu)
    if np.any(diag == 0):
        return complex(-np.inf, 0.0)
    sign_flips = np.count_nonzero(piv != np.arange(piv.size))
    return complex(np.sum(np.log(diag.astype(complex)))) + 1j * np.pi * (sign_flips % 2)


def _logdet_structured(op, m, prof):
    """Angle-Fourier block formula for axisymmetric grids.

    With ``V = exp(i m theta) v(rho, x')`` the operator maps mode ``j`` to
    ``j + m`` through ``B_j = diag(v) Ghat_j``.  Modes are indices mod
    ``n_theta``; each orbit of ``j -> j + m`` of length ``L`` is a cyclic
    block matrix with ``det = det(I - (-1)^L B_{L-1} ... B_0)``.
    """
    Gh = mode_blocks(op.circulant)
    n, M, _ = Gh.shape
    B = prof[None, :, None] * Gh
    eye = np.eye(M)
    if m % n == 0:
        return sum(_logdet_dense(eye + B[j]) for j in range(n))
    step = m % n
    g = math.gcd(step, n)
    L = n // g
    total = 0j
    for j0 in range(g):
        P = eye.astype(complex)
        j = j0
        for _ in range(L):
            P = B[j] @ P
            j = (j + step) % n
        total += _logdet_dense(eye - (-1) ** L * P)
    return total


def fredholm_logdet(op, method="auto"):
    """``log det(I + K)`` (complex, any branch) via pivoted LU.

    ``method`` is ``"dense"`` (full matrix), ``"structured"`` (angle-Fourier
    blocks, needs an axisymmetric operator whose potential has a single
    angular harmonic) or ``"auto"``.
    """
    if op.role != BIRMAN_SCHWINGER:
        raise ValueError("fredholm_det needs a Birman-Schwinger operator")
    if op.potential is not None and not np.any(op.potential):
        return 0j
    if method in ("auto", "structured") and op.circulant is not None:
        harm = _angular_harmonics(op.potential, op.grid)
        if harm is not None:
            return _logdet_structured(op, *harm)
        if method == "structured":
            raise ValueError("potential has several angular harmonics")
    elif method == "structured":
        raise ValueError("structured determinant needs an axisymmetric operator")
    N = op.size
    return _logdet_dense(np.eye(N) + op.matrix)


def fredholm_det(op, method="auto"):
    """``det(I + K)``; overflow is avoided by accumulating the log."""
    ld = fredholm_logdet(op, method)
    if ld == 0:
        return 1 + 0j
    with np.errstate(over="ignore"):
        return complex(np.exp(ld))


def free_operator(sp, grid, cache=None, spec_text=""):
    """``assemble_R0`` with an optional disk cache for dense operators."""
    sp = as_point(sp)
    if cache is None or isinstance(grid, AxisymmetricGrid):
        return assemble_R0(sp, grid)
    key = cache.key(spec_text, grid, sp, FREE_RESOLVENT)
    hit = cache.load(key)
    if hit is not None:
        return NystromOperator(grid, sp, FREE_RESOLVENT, matrix_=hit[0])
    op = assemble_R0(sp, grid)
    cache.store(key, op.matrix, sp)
    return op


def determinant_function(spec, grid=None, sheet=0, method="auto", entire=True, cache=None):
    """``lam -> log det(I + K(lam))`` on a fixed grid.

    With ``entire=True`` in one dimension the pole of the free resolvent at
    the origin is removed by adding ``log(lam)``.  ``cache`` is an optional
    :class:`~resonlab.freeres.OperatorCache` for dense free resolvents.
    """
    grid = default_grid(spec) if grid is None else grid
    v = potential_on_grid(spec, grid)
    zero = not np.any(v)
    text = dump_spec(spec) if cache is not None else ""

    def logdet(lam):
        lam = complex(lam)
        if zero:
            base = 0j
        else:
            op = free_operator(SpectralPoint(lam, sheet), grid, cache, text).scaled_rows(v)
            base = fredholm_logdet(op, method)
        if entire and spec.dimension == 1:
            base += np.log(lam)
        return base

    logdet.grid = grid
    return logdet


# --------------------------------------------------------------------------
# resolvent

def _lu_with_check(M, tol, lam):
    lu, piv = linalg.lu_factor(M, check_finite=False)
    diag = np.diag(lu)
    logabs = float(np.sum(np.log(np.abs(diag)))) if np.all(diag != 0) else -np.inf
    if tol > 0 and logabs < math.log(tol):
        raise NearSingular(lam, math.exp(logabs) if logabs > -700 else 0.0, tol)
    return lu, piv


def resolve(spec, sp, f, grid=None, tol=NEAR_SINGULAR_TOL):
    """``R_V(lam) f = R0 f - R0 (I + V R0)^{-1} V R0 f`` on the grid nodes."""
    sp = as_point(sp)
    grid = default_grid(spec) if grid is None else grid
    f = np.asarray(f, dtype=complex)
    R0 = assemble_R0(sp, grid)
    A = R0.matrix
    g = A @ f
    v = potential_on_grid(spec, grid)
    if not np.any(v):
        return g
    lu = _lu_with_check(np.eye(grid.size) + v[:, None] * A, tol, sp.lam)
    h = linalg.lu_solve(lu, v * g, check_finite=False)
    return g - A @ h


def resolve_at(spec, sp, f, grid, targets, tol=NEAR_SINGULAR_TOL):
    """``(R_V(lam) f)(x)`` at arbitrary targets from a field ``f`` on ``grid``.

    Uses ``R_V f = R0 f - R0 (V u)`` with ``u = R_V f`` on the grid.
    """
    sp = as_point(sp)
    u = resolve(spec, sp, f, grid, tol)
    v = potential_on_grid(spec, grid)
    return apply_R0_at(sp, grid, f - v * u, targets)


def neumann_resolve(spec, sp, f, grid=None, terms=20):
    """Truncated series ``sum_j (-1)^j R0 (V R0)^j f`` (small potentials only)."""
    sp = as_point(sp)
    grid = default_grid(spec) if grid is None else grid
    A = assemble_R0(sp, grid).matrix
    v = potential_on_grid(spec, grid)
    term = np.asarray(f, dtype=complex)
    acc = np.zeros_like(term)
    for j in range(terms):
        acc = acc + (-1) ** j * term
        term = v * (A @ term)
    return A @ acc


# --------------------------------------------------------------------------
# resonance sets

@dataclass(frozen=True)
class Resonance:
    lam: complex
    sheet: int
    multiplicity: int


@dataclass
class ResonanceSet:
    entries: list
    search_region: Region
    tolerances: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def total_multiplicity(self):
        return sum(e.multiplicity for e in self.entries)


def _as_region(region, sheet=0):
    if isinstance(region, Region):
        return region
    (a, b), (c, d) = region
    return Region(a, b, c, d, sheet)


def locate_zeros(spec, region, tol=1e-6, grid=None, method="auto", cache=None, **finder_kw):
    """Zeros of ``det(I + K(lam))`` in a rectangle, with multiplicities.

    ``region`` is a :class:`Region` or ``((re_min, re_max), (im_min, im_max))``.
    """
    region = _as_region(region)
    if spec.dimension == 2 and region.contains(0j):
        raise ValueError("dimension 2 regions must exclude the origin")
    if spec.dimension != 2 and region.sheet != 0:
        raise ValueError("sheets exist only in dimension 2")
    logdet = determinant_function(spec, grid, region.sheet, method, cache=cache)
    found, used, zf = find_zeros(logdet, region, tol=tol, **finder_kw)
    entries = [Resonance(complex(z), region.sheet, int(n)) for z, n in found]
    tols = {"tol": tol, "max_step": zf.max_step, "samples_per_unit": zf.density,
            "near_zero": math.exp(zf.log_near), "evaluations": zf.evaluations}
    return ResonanceSet(entries, used, tols)


def eigenvalue_scan(spec, region, tol=1e-6, grid=None, **kw):
    """Determinant zeros in the upper half plane (L2 eigenvalues ``lam^2``)."""
    region = _as_region(region)
    if region.im_min <= 0:
        raise ValueError("eigenvalue scans need a region inside Im lambda > 0")
    return locate_zeros(spec, region, tol=tol, grid=grid, **kw)


def counting_function(rs, r):
    """Number of zeros with ``|lam| < r``, counted with multiplicity.

    The searched rectangle must span ``[-r, r]`` in the real direction; its
    imaginary extent is the strip the caller declared sufficient.
    """
    reg = rs.search_region
    if r <= 0:
        raise ValueError("r must be positive")
    if reg.re_min > -r or reg.re_max < r:
        raise RegionInsufficient(
            f"search covered Re lambda in [{reg.re_min}, {reg.re_max}], need [-{r}, {r}]")
    return sum(e.multiplicity for e in rs.entries if abs(e.lam) < r)


# --------------------------------------------------------------------------
# scans and CSV

def det_scan(spec, re_values, im_values, grid=None, sheet=0, method="auto", mapper=map,
             cache=None):
    """``det(I + K)`` on the tensor grid (rows ordered by Im, then Re)."""
    logdet = determinant_function(spec, grid, sheet, method, entire=False, cache=cache)
    pts = [complex(x, y) for y in im_values for x in re_values]
    lds = list(mapper(logdet, pts))
    with np.errstate(over="ignore"):
        vals = [complex(np.exp(ld)) for ld in lds]
    return [(p, sheet, v) for p, v in zip(pts, vals)]


def _fmt(x):
    return format(float(x), ".17g")


def write_detscan_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re_lambda", "im_lambda", "sheet", "det_re", "det_im", "abs_det"])
        for lam, sheet, det in rows:
            w.writerow([_fmt(lam.real), _fmt(lam.imag), int(sheet), _fmt(det.real),
                        _fmt(det.imag), _fmt(abs(det))])


def write_resonances_csv(path, rs):
    entries = sorted(rs.entries, key=lambda e: (e.lam.real, e.lam.imag, e.sheet))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re_lambda", "im_lambda", "sheet", "multiplicity"])
        for e in entries:
            w.writerow([_fmt(e.lam.real), _fmt(e.lam.imag), e.sheet, e.multiplicity])
