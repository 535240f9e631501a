"""Quadrature grids covering the support of a potential.

``LineGrid``
    d = 1, composite Chebyshev (first kind) panels with breakpoints at the
    discontinuities of the potential, carrying the spectral integration
    matrices used for product integration of the kinked kernel.
``AxisymmetricGrid``
    d = 2 or 3, Gauss-Legendre nodes in a meridional half-plane (rho, x')
    times an equispaced trapezoid rule in the angle.  Node ``(p, a)`` has
    flat index ``p * M + a`` where ``p`` is the angle index.
``BoxGrid``
    tensor Gauss-Legendre over a cube, used for sampled potentials.

Every grid records the region it covers (``region``) so the free-resolvent
assembly can evaluate the exact volume potential of that region through a
boundary integral and use it for singularity subtraction.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial.legendre import leggauss

__all__ = [
    "QuadratureGrid", "LineGrid", "AxisymmetricGrid", "BoxGrid", "line_grid",
    "cylinder_grid", "ball_grid", "polar_grid", "box_grid", "default_grid",
    "gauss_legendre", "boundary_quadrature",
]


def gauss_legendre(n, a, b):
    x, w = leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    cutoff: np.ndarray
    params: dict = field(default_factory=dict)
    region: tuple = ()
    memo: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size(self):
        return self.weights.shape[0]

    @property
    def dimension(self):
        return self.nodes.shape[1]

    @property
    def radius(self):
        return float(np.sqrt(np.max(np.sum(self.nodes ** 2, axis=1))))

    def key(self):
        """Stable digest of the construction parameters."""
        doc = json.dumps({"type": type(self).__name__, **self.params}, sort_keys=True)
        return hashlib.sha256(doc.encode()).hexdigest()

    def with_cutoff(self, chi):
        """Copy with cutoff values ``chi(nodes)`` (a callable) or an array."""
        vals = chi(self.nodes) if callable(chi) else np.asarray(chi, dtype=float)
        vals = np.broadcast_to(vals, self.weights.shape).astype(float)
        if np.any(vals < 0) or np.any(vals > 1):
            raise ValueError("cutoff values must lie in [0, 1]")
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["cutoff"] = vals
        kw["memo"] = {}
        kw["params"] = {**self.params, "cutoff_digest": hashlib.sha256(vals.tobytes()).hexdigest()}
        return type(self)(**kw)


# --------------------------------------------------------------------------
# one dimension

def _cheb_nodes(n):
    return np.cos(np.pi * (2 * np.arange(n)[::-1] + 1) / (2 * n))


def _cheb_matrices(n):
    t = _cheb_nodes(n)
    vand = C.chebvander(t, n - 1)
    vinv = np.linalg.inv(vand)
    anti = np.empty((n, n))
    end = np.empty(n)
    for l in range(n):
        e = np.zeros(n)
        e[l] = 1.0
        ci = C.chebint(e, lbnd=-1)
        anti[:, l] = C.chebval(t, ci)
        end[l] = C.chebval(1.0, ci)
    return t, vinv, anti @ vinv, end @ vinv


@dataclass(frozen=True, eq=False)
class LineGrid(QuadratureGrid):
    breakpoints: np.ndarray = None
    n_per_panel: int = 0
    panel_of: np.ndarray = None
    ref_nodes: np.ndarray = None
    ref_vinv: np.ndarray = None
    ref_cumulative: np.ndarray = None

    @property
    def n_panels(self):
        return len(self.breakpoints) - 1

    def panel_slice(self, p):
        return slice(p * self.n_per_panel, (p + 1) * self.n_per_panel)

    def locate(self, x):
        """Panel index of each target (targets outside map to -1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        bp = self.breakpoints
        idx = np.searchsorted(bp, x, side="right") - 1
        idx = np.where(x == bp[-1], len(bp) - 2, idx)
        return np.where((x < bp[0]) | (x > bp[-1]), -1, idx)

    def target_rows(self, x):
        """Interpolation and cumulative-integration rows at targets ``x``.

        Returns ``(panel, interp, cumul)`` where ``interp[i] @ f[panel]``
        is the panel interpolant at ``x[i]`` and ``cumul[i] @ f[panel]`` is
        its integral from the panel's left end up to ``x[i]``.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pan = self.locate(x)
        if np.any(pan < 0):
            raise ValueError("target outside the grid")
        a, b = self.breakpoints[pan], self.breakpoints[pan + 1]
        t = (2 * x - a - b) / (b - a)
        n = self.n_per_panel
        interp = C.chebvander(t, n - 1) @ self.ref_vinv
        anti = np.empty((x.size, n))
        for l in range(n):
            e = np.zeros(n)
            e[l] = 1.0
            anti[:, l] = C.chebval(t, C.chebint(e, lbnd=-1))
        cumul = (anti @ self.ref_vinv) * (0.5 * (b - a))[:, None]
        return pan, interp, cumul

    def interpolate(self, f, x):
        pan, interp, _ = self.target_rows(x)
        f = np.asarray(f)
        n = self.n_per_panel
        cols = pan[:, None] * n + np.arange(n)[None, :]
        return np.sum(interp * f[cols], axis=1)


def line_grid(breakpoints, n_per_panel=32, max_panel_length=0.5):
    """Composite Chebyshev grid with panels split at ``breakpoints``."""
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    if bp.size < 2:
        raise ValueError("need at least two distinct breakpoints")
    pts = [bp[0]]
    for lo, hi in zip(bp[:-1], bp[1:]):
        k = max(1, int(math.ceil((hi - lo) / max_panel_length - 1e-12)))
        pts.extend(lo + (hi - lo) * np.arange(1, k + 1) / k)
    bp = np.asarray(pts)
    n = int(n_per_panel)
    t, vinv, cum, wref = _cheb_matrices(n)
    half = 0.5 * np.diff(bp)
    mid = 0.5 * (bp[1:] + bp[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * wref[None, :]).ravel()
    panel_of = np.repeat(np.arange(bp.size - 1), n)
    params = {"breakpoints": bp.tolist(), "n_per_panel": n}
    return LineGrid(nodes[:, None], weights, np.ones_like(weights), params,
                    region=("interval", float(bp[0]), float(bp[-1])),
                    breakpoints=bp, n_per_panel=n, panel_of=panel_of, ref_nodes=t,
                    ref_vinv=vinv, ref_cumulative=cum)


# --------------------------------------------------------------------------
# axisymmetric grids

@dataclass(frozen=True, eq=False)
class AxisymmetricGrid(QuadratureGrid):
    rho: np.ndarray = None
    zp: np.ndarray = None
    mweights: np.ndarray = None
    n_theta: int = 0

    @property
    def n_meridional(self):
        return self.rho.shape[0]

    @property
    def theta(self):
        return 2 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def h_theta(self):
        return 2 * np.pi / self.n_theta

    def as_modes(self, values):
        """Reshape a flat nodal field to ``(n_theta, M)``."""
        return np.asarray(values).reshape(self.n_theta, self.n_meridional)


def _axisym(rho, zp, mw, n_theta, dim, params):
    n_theta = int(n_theta)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    ht = 2 * np.pi / n_theta
    M = rho.size
    x = (np.cos(th)[:, None] * rho[None, :]).ravel()
    y = (np.sin(th)[:, None] * rho[None, :]).ravel()
    cols = [x, y] + ([np.tile(zp, n_theta)] if dim == 3 else [])
    nodes = np.stack(cols, axis=1)
    weights = np.tile(mw, n_theta) * ht
    return AxisymmetricGrid(nodes, weights, np.ones(M * n_theta), params,
                            rho=rho, zp=zp, mweights=mw, n_theta=n_theta)


def cylinder_grid(rho_range, z_range, n_rho, n_z, n_theta):
    """GL in rho and x' times equispaced angle (d = 3)."""
    r, wr = gauss_legendre(n_rho, *rho_range)
    z, wz = gauss_legendre(n_z, *z_range)
    R, Z = np.meshgrid(r, z, indexing="ij")
    WR, WZ = np.meshgrid(wr, wz, indexing="ij")
    rho, zp = R.ravel(), Z.ravel()
    mw = (R * WR * WZ).ravel()
    params = {"shape": "cylinder", "rho_range": list(map(float, rho_range)),
              "z_range": list(map(float, z_range)), "n_rho": n_rho, "n_z": n_z,
              "n_theta": n_theta}
    g = _axisym(rho, zp, mw, n_theta, 3, params)
    return _with_region(g, ("cylinder",) + tuple(map(float, rho_range)) + tuple(map(float, z_range)))


def _with_region(grid, region):
    object.__setattr__(grid, "region", region)
    return grid


def ball_grid(radius, n_r, n_polar, n_theta, inner=0.0):
    """GL in r and cos(polar angle) times equispaced azimuth (d = 3)."""
    r, wr = gauss_legendre(n_r, inner, radius)
    mu, wmu = gauss_legendre(n_polar, -1.0, 1.0)
    Rr, MU = np.meshgrid(r, mu, indexing="ij")
    WR, WMU = np.meshgrid(wr, wmu, indexing="ij")
    s = np.sqrt(1 - MU ** 2)
    rho = (Rr * s).ravel()
    zp = (Rr * MU).ravel()
    mw = (Rr ** 2 * WR * WMU).ravel()
    params = {"shape": "ball", "radius": float(radius), "inner": float(inner),
              "n_r": n_r, "n_polar": n_polar, "n_theta": n_theta}
    g = _axisym(rho, zp, mw, n_theta, 3, params)
    return _with_region(g, ("ball", float(inner), float(radius)))


def polar_grid(rho_range, n_rho, n_theta):
    """GL in rho times equispaced angle (d = 2)."""
    rho, wr = gauss_legendre(n_rho, *rho_range)
    mw = rho * wr
    params = {"shape": "polar", "rho_range": list(map(float, rho_range)),
              "n_rho": n_rho, "n_theta": n_theta}
    g = _axisym(rho, np.zeros_like(rho), mw, n_theta, 2, params)
    return _with_region(g, ("annulus",) + tuple(map(float, rho_range)))


# --------------------------------------------------------------------------
# cartesian box

@dataclass(frozen=True, eq=False)
class BoxGrid(QuadratureGrid):
    pass


def box_grid(half_width, n, dim):
    x, w = gauss_legendre(n, -half_width, half_width)
    mesh = np.meshgrid(*([x] * dim), indexing="ij")
    wmesh = np.meshgrid(*([w] * dim), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
    params = {"shape": "box", "half_width": float(half_width), "n": n, "dim": dim}
    return BoxGrid(nodes, weights, np.ones_like(weights), params,
                   region=("box", float(half_width), int(dim)))


# --------------------------------------------------------------------------
# defaults

def default_grid(spec, resolution=None):
    """Grid matched to the geometry of ``spec``.

    ``resolution`` is a mapping of the keyword arguments of the relevant
    builder, overriding the defaults listed in the README.
    """
    from .potentials import Radial, SeparableAngular

    res = dict(resolution or {})
    k = spec.kind
    d = spec.dimension
    if d == 1:
        R = spec.support_radius
        bps = [-R, R]
        if isinstance(k, Radial):
            bps += [s * t for t in k.profile.breakpoints for s in (-1, 1) if abs(t) <= R]
        elif hasattr(k, "axes"):
            bps += list(k.axes[0])
        extra = res.pop("extra_breakpoints", [])
        return line_grid(sorted(set(bps) | set(extra)), res.get("n_per_panel", 32),
                         res.get("max_panel_length", 0.5))
    if isinstance(k, SeparableAngular):
        rlo, rhi = max(0.0, k.v1.support[0]), k.v1.support[1]
        if d == 2:
            return polar_grid((rlo, rhi), res.get("n_rho", 8), res.get("n_theta", 32))
        return cylinder_grid((rlo, rhi), k.v2.support, res.get("n_rho", 6),
                             res.get("n_z", 6), res.get("n_theta", 32))
    if isinstance(k, Radial):
        lo, hi = k.profile.support
        lo = max(lo, 0.0)
        if d == 2:
            return polar_grid((lo, hi), res.get("n_rho", 10), res.get("n_theta", 16))
        return ball_grid(hi, res.get("n_r", 10), res.get("n_polar", 10),
                         res.get("n_theta", 16), inner=lo)
    return box_grid(spec.support_radius, res.get("n", 12), d)


# --------------------------------------------------------------------------
# boundary quadrature of the covered region

def boundary_quadrature(region, nq=96):
    """Points, outward normals and surface weights on the region boundary.

    Angular directions use Gauss-Legendre on ``[0, pi]`` mirrored to
    ``[-pi, 0]`` so nodes cluster at angle 0, where targets placed at angle 0
    make the integrands peak.
    """
    kind = region[0]
    t, wt = gauss_legendre(nq, 0.0, np.pi)
    th = np.concatenate([t, -t])
    wth = np.concatenate([wt, wt])
    pts, nrm, wts = [], [], []

    def add(p, n, w):
        pts.append(p.reshape(-1, p.shape[-1]))
        nrm.append(n.reshape(-1, n.shape[-1]))
        wts.append(w.ravel())

    if kind == "cylinder":
        r1, r2, z1, z2 = region[1:]
        r, wr = gauss_legendre(nq, r1, r2)
        R, TH = np.meshgrid(r, th, indexing="ij")
        W = np.outer(wr * r, wth)
        for zf, sgn in ((z2, 1.0), (z1, -1.0)):
            p = np.stack([R * np.cos(TH), R * np.sin(TH), np.full_like(R, zf)], -1)
            n = np.zeros_like(p)
            n[..., 2] = sgn
            add(p, n, W)
        z, wz = gauss_legendre(nq, z1, z2)
        Z, TH = np.meshgrid(z, th, indexing="ij")
        for rf, sgn in ((r2, 1.0), (r1, -1.0)):
            if rf <= 0:
                continue
            p = np.stack([rf * np.cos(TH), rf * np.sin(TH), Z], -1)
            n = sgn * np.stack([np.cos(TH), np.sin(TH), np.zeros_like(Z)], -1)
            add(p, n, np.outer(wz, wth) * rf)
    elif kind == "ball":
        r0, R = region[1:]
        mu, wmu = gauss_legendre(nq, -1.0, 1.0)
        MU, TH = np.meshgrid(mu, th, indexing="ij")
        S = np.sqrt(1 - MU ** 2)
        dirs = np.stack([S * np.cos(TH), S * np.sin(TH), MU], -1)
        for rf, sgn in ((R, 1.0), (r0, -1.0)):
            if rf <= 0:
                continue
            add(rf * dirs, sgn * dirs, np.outer(wmu, wth) * rf * rf)
    elif kind == "annulus":
        r1, r2 = region[1:]
        dirs = np.stack([np.cos(th), np.sin(th)], -1)
        for rf, sgn in ((r2, 1.0), (r1, -1.0)):
            if rf <= 0:
                continue
            add(rf * dirs, sgn * dirs, wth * rf)
    elif kind == "box":
        a, dim = region[1], region[2]
        x, wx = gauss_legendre(2 * nq, -a, a)
        for axis in range(dim):
            others = [k for k in range(dim) if k != axis]
            mesh = np.meshgrid(*([x] * (dim - 1)), indexing="ij")
            wmesh = np.meshgrid(*([wx] * (dim - 1)), indexing="ij")
            w = np.prod(wmesh, axis=0) if dim > 2 else wmesh[0]
            for sgn in (1.0, -1.0):
                p = np.zeros(mesh[0].shape + (dim,))
                for k, m in zip(others, mesh):
                    p[..., k] = m
                p[..., axis] = sgn * a
                n = np.zeros_like(p)
                n[..., axis] = sgn
                add(p, n, w)
    else:
        raise ValueError(f"no boundary quadrature for region {kind!r}")
    return np.concatenate(pts), np.concatenate(nrm), np.concatenate(wts)
