"""Closed-form and ODE reference solutions used to validate the discretizations.

These are independent of the Nystrom machinery: the square well has an
explicit matching condition, piecewise-constant one-dimensional potentials
have transfer matrices, and radial three-dimensional potentials reduce to
ordinary differential equations per angular momentum.
"""
from __future__ import annotations

import cmath
import math

import mpmath as mp
import numpy as np
from scipy import special
from scipy.integrate import solve_ivp

__all__ = ["square_well_matching", "square_well_det", "square_well_roots",
           "square_well_bound_states", "transfer_smatrix", "smatrix_det_1d",
           "jost_function", "radial_smatrix_det"]


# --------------------------------------------------------------------------
# one-dimensional square well of depth ``V0`` (value of V inside) and width L

def square_well_matching(lam, V0, L, ctx=None):
    """Entire matching function whose zeros are the square-well resonances.

    ``(k^2 + lam^2) sin(kL)/k + 2 i lam cos(kL)`` with ``k^2 = lam^2 - V0``.
    """
    m = ctx or cmath
    k = m.sqrt(lam * lam - V0)
    if k == 0:
        sinc = L
    else:
        sinc = m.sin(k * L) / k
    return (k * k + lam * lam) * sinc + 2j * lam * m.cos(k * L)


def square_well_det(lam, V0, L):
    """``det(I + V R0(lam))`` for the square well (nonzero ``lam``)."""
    return cmath.exp(1j * lam * L) * square_well_matching(lam, V0, L) / (2j * lam)


def square_well_roots(V0, L, re_range, im_range, im_seeds=None, dps=30):
    """Roots of the matching function in a rectangle.

    Newton iterations in extended precision are seeded at ``Re lam = n pi / L``
    on several heights; distinct converged roots inside the rectangle are
    returned sorted by real part.
    """
    lo, hi = re_range
    ilo, ihi = im_range
    if im_seeds is None:
        im_seeds = np.linspace(ilo, ihi, 9)
    nmin = int(math.floor(lo * L / math.pi)) - 1
    nmax = int(math.ceil(hi * L / math.pi)) + 1
    roots = []
    with mp.workdps(dps):
        f = lambda z: square_well_matching(z, V0, L, ctx=mp)
        for n in range(nmin, nmax + 1):
            for y in im_seeds:
                seed = mp.mpc(n * math.pi / L + 0.5 * math.pi / L, y)
                try:
                    z = complex(mp.findroot(f, seed, solver="newton", tol=1e-25, maxsteps=60))
                except (ValueError, ZeroDivisionError):
                    continue
                if not (lo <= z.real <= hi and ilo <= z.imag <= ihi):
                    continue
                if abs(complex(f(mp.mpc(z)))) > 1e-8 * max(1.0, abs(z)) ** 2:
                    continue
                if all(abs(z - r) > 1e-8 for r in roots):
                    roots.append(z)
    return sorted(roots, key=lambda z: (z.real, z.imag))


def square_well_bound_states(V0, L):
    """Bound states ``lam = i kappa`` of a real well (``V0 < 0``).

    Even states satisfy ``q tan(qL/2) = kappa`` and odd ones
    ``-q cot(qL/2) = kappa`` with ``q^2 + kappa^2 = -V0``.
    """
    from scipy.optimize import brentq

    depth = -float(V0)
    if depth <= 0:
        return []
    out = []
    qmax = math.sqrt(depth)
    g_even = lambda q: q * math.tan(q * L / 2) - math.sqrt(max(depth - q * q, 0.0))
    g_odd = lambda q: -q / math.tan(q * L / 2) - math.sqrt(max(depth - q * q, 0.0))
    # both branches are monotone between the poles of tan and cot
    edges = sorted({0.0, qmax} | {n * math.pi / L for n in range(1, int(qmax * L / math.pi) + 1)})
    for g in (g_even, g_odd):
        for a, b in zip(edges[:-1], edges[1:]):
            a1, b1 = a + 1e-12, b - 1e-12
            if b1 <= a1:
                continue
            try:
                if g(a1) * g(b1) < 0:
                    q = brentq(g, a1, b1, xtol=1e-15)
                    out.append(1j * math.sqrt(depth - q * q))
            except (ValueError, ZeroDivisionError):
                continue
    return sorted(out, key=lambda z: -z.imag)


# --------------------------------------------------------------------------
# transfer matrices for piecewise-constant potentials

def _basis(k, x):
    e, f = cmath.exp(1j * k * x), cmath.exp(-1j * k * x)
    return np.array([[e, f], [1j * k * e, -1j * k * f]])


def transfer_smatrix(segments, lam):
    """2x2 scattering matrix ``[[t, r_right], [r_left, t_right]]``.

    ``segments`` is a list of ``(a, b, value)`` with consecutive intervals;
    outside them V = 0.  Solutions are ``A exp(ikx) + B exp(-ikx)`` piecewise.
    """
    lam = complex(lam)
    M = np.eye(2, dtype=complex)
    for a, b, v in segments:
        k = cmath.sqrt(lam * lam - v)
        # free coefficients -> segment coefficients at a -> free coefficients at b
        M = np.linalg.solve(_basis(k, a), _basis(lam, a)) @ M
        M = np.linalg.solve(_basis(lam, b), _basis(k, b)) @ M
    t = 1.0 / M[1, 1]
    r_left = -M[1, 0] / M[1, 1]
    r_right = M[0, 1] / M[1, 1]
    t_right = M[0, 0] - M[0, 1] * M[1, 0] / M[1, 1]
    return np.array([[t, r_right], [r_left, t_right]])


def smatrix_det_1d(segments, lam):
    return complex(np.linalg.det(transfer_smatrix(segments, lam)))


# --------------------------------------------------------------------------
# radial potentials in three dimensions

def _riccati_hankel(l, z):
    """Outgoing Riccati-Hankel ``z h_l(z)`` and its derivative."""
    jn = special.spherical_jn(l, z)
    yn = special.spherical_yn(l, z)
    jd = special.spherical_jn(l, z, derivative=True)
    yd = special.spherical_yn(l, z, derivative=True)
    h = jn + 1j * yn
    hd = jd + 1j * yd
    return z * h, h + z * hd


def _wronskian(lam, l, profile, R, r0=1e-6):
    def rhs(r, y):
        V = complex(profile(r)) if profile is not None else 0.0
        return [y[1], (l * (l + 1) / r ** 2 + V - lam * lam) * y[0]]

    y0 = [complex(r0 ** (l + 1)), complex((l + 1) * r0 ** l)]
    sol = solve_ivp(rhs, [r0, R], y0, method="DOP853", rtol=1e-12, atol=1e-15)
    u, du = sol.y[0, -1], sol.y[1, -1]
    h, hd = _riccati_hankel(l, lam * R)
    return du * h - u * lam * hd


def jost_function(lam, l, profile, R):
    """Normalized Jost function (1 for V = 0) of angular momentum ``l``.

    ``profile`` is a callable of ``r`` vanishing beyond ``R``.  Zeros in
    ``lam`` are the resonances (and eigenvalues) of the channel, each of
    multiplicity ``2l + 1`` in three dimensions.
    """
    lam = complex(lam)
    return _wronskian(lam, l, profile, R) / _wronskian(lam, l, None, R)


def radial_smatrix_det(lam, profile, R, l_max=12):
    """``det S`` for a radial potential as a product over channels."""
    out = 1 + 0j
    for l in range(l_max + 1):
        out *= (jost_function(-lam, l, profile, R) / jost_function(lam, l, profile, R)) ** (2 * l + 1)
    return out
