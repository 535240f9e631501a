"""Time-domain solutions of ``u_tt = Lap u - V u`` and decay analytics.

Two leapfrog solvers are provided: a line solver for d = 1 and a per-mode
solver for d = 3 potentials that are separable in the cylindrical angle or
radial.  Both start from ``(u, u_t) = (0, f)`` with ``f`` a mollified point
mass, so ``u`` approximates a column of the sine propagator.  In one
dimension the same quantity is also available from the spectral
representation of the propagator along a horizontal line in the upper half
plane.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import _backend
from .birman import eigenvalue_scan, locate_zeros, resolve_at
from .contour import Region
from .errors import (BoundaryContamination, CFLViolation, FloorReached, PreconditionPoles,
                     TailUnconverged, TruncationLeak)
from .grids import line_grid
from .potentials import Radial, SeparableAngular, eval_cylindrical, eval_potential

__all__ = ["WaveField", "DecayReport", "run_fdtd_1d", "run_mode_wave_3d",
           "spectral_rep_evaluate", "decay_rates", "gaussian_source_1d", "mode_source_3d",
           "write_decay_csv", "write_verdict_json", "SUPEREXP", "EXP", "INCONCLUSIVE"]

SUPEREXP, EXP, INCONCLUSIVE = "SUPEREXP", "EXP", "INCONCLUSIVE"
CFL_FRACTION = 0.9
MOLLIFIER_CUT = 8.0


@dataclass
class WaveField:
    """Result of a time-domain run.

    ``local_energy[k]`` is ``||chi u(times[k])||`` with ``chi`` the indicator
    of the measurement ball.  Per-mode runs also fill ``mode_energy``.
    """

    times: np.ndarray
    local_energy: np.ndarray
    u: object
    u_t: object
    time: float
    cfl: float
    dt: float
    h: float
    modes: list = field(default_factory=list)
    mode_energy: dict = field(default_factory=dict)
    samples: np.ndarray = None
    axes: tuple = ()


@dataclass
class DecayReport:
    windows: list
    slopes: list
    verdict: str
    margin: float

    def as_dict(self):
        return {"windows": [list(map(float, w)) for w in self.windows],
                "slopes": [float(s) for s in self.slopes],
                "verdict": self.verdict, "margin": float(self.margin)}


# --------------------------------------------------------------------------
# sources

def gaussian_source_1d(x, y, sigma):
    """Unit-mass Gaussian centred at ``y``, cut at eight widths."""
    q = (np.asarray(x, dtype=float) - y) / sigma
    f = np.exp(-0.5 * q * q) / (math.sqrt(2 * math.pi) * sigma)
    return np.where(np.abs(q) <= MOLLIFIER_CUT, f, 0.0)


def mode_source_3d(rho, z, rho_y, z_y, sigma, j):
    """Mode ``j`` component of a unit-mass 3D Gaussian at ``(rho_y, 0, z_y)``.

    Angular averaging of the Gaussian against ``exp(-i j theta)`` gives a
    modified Bessel function; ``ive`` keeps it finite for narrow sources.
    """
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    q2 = ((rho - rho_y) ** 2 + (z - z_y) ** 2) / sigma ** 2
    f = (2 * math.pi * sigma ** 2) ** -1.5 * np.exp(-0.5 * q2) * special.ive(j, rho * rho_y / sigma ** 2)
    return np.where(q2 <= MOLLIFIER_CUT ** 2, f, 0.0)


# --------------------------------------------------------------------------
# one dimension

def _check_cfl(cfl, bound, dt, vmax):
    if cfl > CFL_FRACTION * bound:
        raise CFLViolation(f"cfl {cfl:.4g} exceeds {CFL_FRACTION} of the stability bound {bound:.4g}")
    if dt * dt * vmax > 0.5:
        raise CFLViolation(f"time step {dt:.3g} too large for sup|V| = {vmax:.3g}")


def _time_step(h, cfl):
    # dt divides 1 so integer and simple fractional times fall on steps
    n = int(math.ceil(1.0 / (cfl * h) - 1e-12))
    return 1.0 / n


def run_fdtd_1d(spec, T, y=0.0, sigma=0.05, h=0.005, cfl=0.5, measure_radius=None,
                half_width=None, samples=None, record_every=1):
    """Leapfrog solution of ``u_tt = u_xx - V u`` with ``u(0) = 0, u_t(0) = f``.

    ``samples`` is a list of ``(t, x)`` at which ``u`` is reported (linear
    interpolation in space and time).  The grid half width defaults to the
    smallest value keeping the measurement interval free of boundary
    reflections up to time ``T``.
    """
    if spec.dimension != 1:
        raise ValueError("run_fdtd_1d needs a one-dimensional potential")
    Rm = spec.support_radius if measure_radius is None else float(measure_radius)
    extent = max(abs(y) + MOLLIFIER_CUT * sigma, spec.support_radius)
    reach = max([Rm] + [abs(x) for _, x in (samples or [])])
    if half_width is None:
        half_width = max(Rm + T, 0.5 * (T + extent + reach)) + 20 * h
    if (half_width - extent) + (half_width - reach) <= T:
        raise BoundaryContamination(
            f"half width {half_width} lets reflections reach the measured region before t = {T}")
    dt = _time_step(h, cfl)
    vmax = spec.sup_norm
    _check_cfl(dt / h, 1.0, dt, vmax)
    n = int(round(2 * half_width / h)) + 1
    x = -half_width + h * np.arange(n)
    v = np.asarray(eval_potential(spec, x[:, None]), dtype=complex)
    vdt2 = np.ascontiguousarray(v * dt * dt)
    f = gaussian_source_1d(x, y, sigma).astype(complex)
    c2 = (dt / h) ** 2
    chi = np.abs(x) <= Rm

    lap_f = np.zeros_like(f)
    lap_f[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / (h * h)
    up = np.zeros(n, dtype=complex)
    u = dt * f + dt ** 3 / 6 * (lap_f - v * f)
    un = np.zeros(n, dtype=complex)
    steps = int(round(T / dt))
    seed = MOLLIFIER_CUT * sigma + 16 * h
    ylo, yhi = min(y, -spec.support_radius), max(y, spec.support_radius)

    times, energy = [0.0], [0.0]
    sample_x = np.array([s[1] for s in samples]) if samples else None
    hist = [np.zeros(len(samples or []), dtype=complex)]
    if samples:
        hist.append(np.interp(sample_x, x, u.real) + 1j * np.interp(sample_x, x, u.imag))

    def rec(k, arr):
        times.append(k * dt)
        energy.append(math.sqrt(h * float(np.sum(np.abs(arr[chi]) ** 2))))

    rec(1, u)
    for k in range(1, steps):
        # waves move at unit speed; the active window only ever grows
        r = seed + k * dt
        i0 = max(int((ylo - r + half_width) / h) - 1, 0)
        i1 = min(int((yhi + r + half_width) / h) + 2, n)
        _backend.line_step(up, u, un, vdt2, c2, i0, i1)
        up, u, un = u, un, up
        if samples:
            hist.append(np.interp(sample_x, x, u.real) + 1j * np.interp(sample_x, x, u.imag))
        if (k + 1) % record_every == 0 or k + 1 == steps:
            rec(k + 1, u)
    out = None
    if samples:
        H = np.array(hist)
        tgrid = dt * np.arange(H.shape[0])
        out = np.array([np.interp(t, tgrid, H[:, i].real) + 1j * np.interp(t, tgrid, H[:, i].imag)
                        for i, (t, _) in enumerate(samples)])
    ut = (u - up) / dt
    return WaveField(np.array(times), np.array(energy), u, ut, steps * dt, dt / h, dt, h,
                     samples=out, axes=(x,))


# --------------------------------------------------------------------------
# three dimensions, angular modes

def _mode_chain(spec, j0, J):
    k = spec.kind
    if isinstance(k, SeparableAngular):
        m = k.m
        chain = []
        j = j0
        while abs(j) <= J:
            chain.append(j)
            j += m
        return chain, m
    if isinstance(k, Radial) or spec.is_zero:
        return [j0], 0
    raise ValueError("mode solver needs a separable-angular or radial potential")


def run_mode_wave_3d(spec, T, j0=0, source=(0.5, 0.1), sigma=0.08, h=0.025, J=12, cfl=0.5,
                     measure_radius=1.0, half_width=None, record_every=1, leak_tol=1e-10):
    """Per-mode leapfrog for d = 3 on a staggered ``(rho, z)`` grid.

    ``u = sum_j u_j(rho, z) exp(i j theta)``.  Mode ``j`` sees the
    cylindrical Laplacian with its ``-j^2/rho^2`` term treated implicitly
    and receives ``-V1 V2 u_{j-m}`` from the mode below it (``-V u_j`` for
    radial potentials).  Only modes ``j0, j0 + m, ...`` with ``|j| <= J``
    can be excited.
    """
    if spec.dimension != 3:
        raise ValueError("run_mode_wave_3d needs a three-dimensional potential")
    chain, m = _mode_chain(spec, j0, J)
    rho_y, z_y = map(float, source)
    Rm = float(measure_radius)
    extent = max(math.hypot(rho_y, z_y) + MOLLIFIER_CUT * sigma, spec.support_radius)
    if half_width is None:
        half_width = max(Rm + T, 0.5 * (T + extent + Rm)) + 4 * h
    if (half_width - extent) + (half_width - Rm) <= T:
        raise BoundaryContamination(
            f"half width {half_width} lets reflections reach the measured region before t = {T}")
    dt = _time_step(h, cfl)
    _check_cfl(dt / h, 1.0 / math.sqrt(2.0), dt, spec.sup_norm)

    nr = int(math.ceil(half_width / h))
    nzh = nr
    nz = 2 * nzh + 1
    rho = (np.arange(nr) + 0.5) * h
    z = (np.arange(nz) - nzh) * h
    P, Z = np.meshgrid(rho, z, indexing="ij")
    if spec.is_zero:
        V = np.zeros_like(P, dtype=complex)
    else:
        V = np.asarray(eval_cylindrical(spec, P, np.zeros_like(P), Z), dtype=complex)
    vdt2 = np.ascontiguousarray(V * dt * dt)
    has_v = bool(np.any(V))
    dt2 = dt * dt
    cp = (np.arange(nr) + 1.0) / ((np.arange(nr) + 0.5) * h * h)
    cm = np.arange(nr) / ((np.arange(nr) + 0.5) * h * h)
    ch = 1.0 / (h * h)
    inv = {j: 1.0 / (1.0 + dt2 * j * j / (2 * rho ** 2)) for j in chain}
    chi = (P ** 2 + Z ** 2) <= Rm ** 2
    wvol = 2 * math.pi * P * h * h * chi

    def lap(fj, j):
        out = np.zeros_like(fj)
        out[:-1] += cp[:-1, None] * (fj[1:] - fj[:-1])
        out[1:] -= cm[1:, None] * (fj[1:] - fj[:-1])
        out[:, 1:-1] += ch * (fj[:, 2:] - 2 * fj[:, 1:-1] + fj[:, :-2])
        out[:, 0] += ch * (fj[:, 1] - 2 * fj[:, 0])
        out[:, -1] += ch * (fj[:, -2] - 2 * fj[:, -1])
        return out - (j * j / rho ** 2)[:, None] * fj

    f = mode_source_3d(P, Z, rho_y, z_y, sigma, j0).astype(complex)
    up = {j: np.zeros((nr, nz), dtype=complex) for j in chain}
    u = {j: np.zeros((nr, nz), dtype=complex) for j in chain}
    un = {j: np.zeros((nr, nz), dtype=complex) for j in chain}
    # u(dt) = dt f + dt^3/6 (Lap - V) f, with V f landing in mode j0 + m
    u[j0] = dt * f + dt ** 3 / 6 * lap(f, j0)
    if has_v:
        target = j0 + m
        if target in u:
            u[target] = u[target] - dt ** 3 / 6 * V * f

    def src(j):
        if not has_v:
            return None
        if m == 0:
            return u[j]
        return u.get(j - m)

    times = [0.0]
    menergy = {j: [0.0] for j in chain}

    def rec(k):
        times.append(k * dt)
        for j in chain:
            menergy[j].append(float(np.sum(wvol * np.abs(u[j]) ** 2)))

    rec(1)
    steps = int(round(T / dt))
    seed = MOLLIFIER_CUT * sigma + 4 * h
    zlo, zhi = min(z_y, -spec.support_radius), max(z_y, spec.support_radius)
    rhi = max(rho_y, spec.support_radius)
    zero = np.zeros((nr, nz), dtype=complex)
    for k in range(1, steps):
        r = seed + k * dt
        i1 = min(int((rhi + r) / h) + 2, nr)
        k0 = max(int((zlo - r) / h) + nzh - 1, 0)
        k1 = min(int((zhi + r) / h) + nzh + 2, nz)
        for j in chain:
            w = src(j)
            _backend.mode_step(up[j], u[j], un[j], vdt2, zero if w is None else w, w is not None,
                               cp, cm, inv[j], ch, dt2, i1, k0, k1)
        up, u, un = u, un, up
        if (k + 1) % record_every == 0 or k + 1 == steps:
            rec(k + 1)
    menergy = {j: np.array(e) for j, e in menergy.items()}
    total = sum(menergy.values())
    if len(chain) > 1:
        last = menergy[chain[-1]]
        if np.any(last > leak_tol * np.maximum(total, 1e-300)):
            raise TruncationLeak(f"mode {chain[-1]} carries more than {leak_tol} of the local energy")
    ut = {j: (u[j] - up[j]) / dt for j in chain}
    return WaveField(np.array(times), np.sqrt(total), u, ut, steps * dt, dt / h, dt, h,
                     modes=chain, mode_energy={j: np.sqrt(e) for j, e in menergy.items()},
                     axes=(rho, z))


# --------------------------------------------------------------------------
# spectral representation (d = 1)

def _spectral_grid(spec, y, sigma, n_per_panel):
    R = spec.support_radius
    lo = min(-R, y - MOLLIFIER_CUT * sigma)
    hi = max(R, y + MOLLIFIER_CUT * sigma)
    bps = [lo, hi, -R, R, y - MOLLIFIER_CUT * sigma, y + MOLLIFIER_CUT * sigma]
    prof = getattr(spec.kind, "profile", None)
    if prof is not None:
        bps += [s * t for t in prof.breakpoints for s in (-1, 1) if abs(t) <= R]
    bps = [b for b in bps if lo <= b <= hi]
    return line_grid(bps, n_per_panel, min(0.25, 2 * sigma))


def _gate(spec, beta, gate_re, tol):
    vmax = spec.sup_norm
    top = math.sqrt(vmax) + 1.0
    found = []
    if vmax > 0:
        found += list(eigenvalue_scan(spec, Region(-top, top, 1e-3, top), tol=tol))
        if beta > 0:
            found += list(locate_zeros(spec, Region(-gate_re, gate_re, -beta, 1e-3 + 1e-9), tol=tol))
    if found:
        raise PreconditionPoles(f"determinant zeros in the integration strip: {[e.lam for e in found]}")


def spectral_rep_evaluate(spec, t, x, y=0.0, sigma=0.1, beta=0.0, ds=None, tol=1e-12,
                          s_cap=None, gate=True, gate_re=20.0, n_per_panel=32, chunk=64):
    """``u(t, x)`` for ``u_tt = u_xx - V u``, ``u(0) = 0``, ``u_t(0) = f``.

    Evaluates ``(1 / 2 pi i) int sin(t lam) (R_V(lam) - R_V(-lam)) f dlam``
    along ``Im lam = beta`` by the midpoint trapezoid rule.  Nodes are added
    symmetrically until a whole chunk on each side falls below ``tol``
    relative to the largest value seen.

    The step aliases the solution at times near ``2 pi / ds``, weighted by
    ``exp(beta * time)`` on a shifted line, so the default step shrinks
    with ``beta``.  ``s_cap`` defaults to the largest ``|Re lam|`` the
    source grid resolves; a tail still above ``tol`` there raises
    ``TailUnconverged``.

    Returns an array of shape ``(len(t), len(x))``.
    """
    if spec.dimension != 1:
        raise ValueError("the spectral representation is implemented for d = 1")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if gate and not spec.is_zero:
        _gate(spec, beta, gate_re, 1e-6)
    grid = _spectral_grid(spec, y, sigma, n_per_panel)
    f = gaussian_source_1d(grid.nodes[:, 0], y, sigma).astype(complex)
    span = max(np.max(np.abs(x)), abs(y), spec.support_radius)
    if ds is None:
        ds = math.pi / ((1.0 + beta) * (t.max() + 4 * span + 4.0))
    if s_cap is None:
        panel = float(np.max(np.diff(grid.breakpoints)))
        s_cap = 0.5 * math.pi * n_per_panel / panel

    def integrand(s):
        lam = complex(s, beta)
        w = (resolve_at(spec, lam, f, grid, x, tol=0.0)
             - resolve_at(spec, -lam, f, grid, x, tol=0.0))
        return np.sin(t * lam)[:, None] * w[None, :]

    total = np.zeros((t.size, x.size), dtype=complex)
    peak = 0.0
    k = 0
    while True:
        tail = 0.0
        for kk in range(k, k + chunk):
            for sgn in (1, -1):
                val = integrand(sgn * (kk + 0.5) * ds)
                total += val
                mag = float(np.max(np.abs(val)))
                peak = max(peak, mag)
                tail = max(tail, mag)
        k += chunk
        if tail <= tol * peak:
            break
        if k * ds > s_cap:
            raise TailUnconverged(f"integrand still at {tail / peak:.2e} of its peak at |Re lam| = {k * ds:.1f}")
    return total * ds / (2j * math.pi)


# --------------------------------------------------------------------------
# decay analytics

def decay_rates(times, energy, windows, margin=0.1, floor=1e-14):
    """Least-squares decay rate ``-d log E / dt`` in each window.

    The verdict is SUPEREXP if there are at least three windows and each
    rate exceeds the previous one by more than ``margin`` (relative), EXP if
    all rates lie within ``margin`` of their mean, INCONCLUSIVE otherwise.
    """
    times = np.asarray(times, dtype=float)
    energy = np.asarray(energy, dtype=float)
    wins = sorted((float(a), float(b)) for a, b in windows)
    for (a0, b0), (a1, b1) in zip(wins[:-1], wins[1:]):
        if a1 < b0:
            raise ValueError("windows must be disjoint")
    slopes = []
    for a, b in wins:
        sel = (times >= a) & (times <= b)
        if np.count_nonzero(sel) < 3:
            raise ValueError(f"window [{a}, {b}] holds fewer than three samples")
        e = energy[sel]
        if np.any(e <= floor):
            raise FloorReached(f"energy reaches the floor {floor} inside window [{a}, {b}]")
        slopes.append(-float(np.polyfit(times[sel], np.log(e), 1)[0]))
    s = np.array(slopes)
    verdict = INCONCLUSIVE
    if len(s) >= 3 and np.all(s[1:] > s[:-1] + margin * np.abs(s[:-1])):
        verdict = SUPEREXP
    elif len(s) >= 2 and np.all(np.abs(s - s.mean()) <= margin * abs(s.mean())):
        verdict = EXP
    return DecayReport(wins, slopes, verdict, margin)


def write_decay_csv(path, wf, per_mode=False):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if per_mode and wf.modes:
            w.writerow(["t", "local_energy", "mode"])
            for j in wf.modes:
                for t, e in zip(wf.times, wf.mode_energy[j]):
                    w.writerow([format(t, ".17g"), format(float(e), ".17g"), j])
        else:
            w.writerow(["t", "local_energy"])
            for t, e in zip(wf.times, wf.local_energy):
                w.writerow([format(t, ".17g"), format(float(e), ".17g")])


def write_verdict_json(path, report, extra=None):
    doc = dict(report.as_dict())
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
