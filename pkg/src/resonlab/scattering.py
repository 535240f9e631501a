"""Scattering determinant, scattering phase and the rotation homotopy."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, special

from .birman import determinant_function, potential_on_grid
from .errors import NearSingular, TruncationUnconverged, UnwrapAmbiguous
from .freeres import as_point, assemble_R0
from .grids import default_grid
from .potentials import SeparableAngular, scale_family

__all__ = ["sdet_ratio", "sdet_farfield", "farfield_smatrix", "ScatteringData",
           "scattering_data", "scattering_phase", "homotopy_scan", "write_phase_csv",
           "write_homotopy_csv"]

_LOG_NEAR_SINGULAR = np.log(1e-10)


def sdet_ratio(spec, sp, grid=None, method="auto"):
    """``s_V(lam) = det(I + K(-lam)) / det(I + K(lam))`` for odd dimension."""
    if spec.dimension % 2 == 0:
        raise ValueError("the determinant ratio applies in odd dimension only")
    lam = complex(as_point(sp).lam)
    logdet = determinant_function(spec, grid, 0, method, entire=False)
    den = logdet(lam)
    if den.real < _LOG_NEAR_SINGULAR:
        raise NearSingular(lam, float(np.exp(den.real)), 1e-10)
    return complex(np.exp(logdet(-lam) - den))


# --------------------------------------------------------------------------
# far-field cross-check

def _channels(L):
    return [(l, m) for l in range(L + 1) for m in range(-l, l + 1)]


def farfield_smatrix(spec, lam, L, grid=None):
    """Scattering matrix on spherical-harmonic channels ``l <= L`` (d = 3).

    For incident data with angular profile ``Y_lm`` the incoming field is
    ``4 pi i^l j_l(lam r) Y_lm``; the Lippmann-Schwinger solution
    ``u = phi - R0 V u`` is found on the grid and projected onto the
    outgoing channels.
    """
    if spec.dimension != 3:
        raise ValueError("far-field matrices are implemented for d = 3")
    lam = float(lam)
    if lam <= 0:
        raise ValueError("lambda must be real and positive")
    grid = default_grid(spec) if grid is None else grid
    v = potential_on_grid(spec, grid)
    x = grid.nodes
    r = np.linalg.norm(x, axis=1)
    polar = np.arccos(np.clip(x[:, 2] / np.where(r > 0, r, 1.0), -1.0, 1.0))
    azim = np.arctan2(x[:, 1], x[:, 0])
    chans = _channels(L)
    Y = np.stack([special.sph_harm_y(l, m, polar, azim) for l, m in chans], axis=1)
    jl = np.stack([special.spherical_jn(l, lam * r) for l, _ in chans], axis=1)
    il = np.array([1j ** l for l, _ in chans])
    phi = 4 * np.pi * il[None, :] * jl * Y
    if not np.any(v):
        return np.eye(len(chans), dtype=complex)
    A = assemble_R0(lam, grid).matrix
    u = linalg.solve(np.eye(grid.size) + A * v[None, :], phi, check_finite=False)
    out = (il.conj()[None, :] * jl * Y.conj() * (grid.weights * v)[:, None]).T @ u
    return np.eye(len(chans)) - (1j * lam / (2 * np.pi)) * out


def sdet_farfield(spec, lam, L=8, grid=None, tol=1e-3, check=True):
    """``det`` of the channel-truncated scattering matrix.

    With ``check`` the truncation ``L`` is compared against ``L + 2`` and
    ``TruncationUnconverged`` is raised if the two differ by more than ``tol``.
    """
    S = farfield_smatrix(spec, lam, L + 2 if check else L, grid)
    n = (L + 1) ** 2
    d = complex(np.linalg.det(S[:n, :n]))
    if check:
        d2 = complex(np.linalg.det(S))
        if abs(d2 - d) > tol:
            raise TruncationUnconverged(f"det S changes by {abs(d2 - d):.2e} from L={L} to L={L + 2}")
    return d


# --------------------------------------------------------------------------
# phases

@dataclass
class ScatteringData:
    lambda_grid: np.ndarray
    s_values: np.ndarray
    sigma: np.ndarray = None
    log_abs: np.ndarray = None
    meta: dict = field(default_factory=dict)


def scattering_data(spec, lambdas, grid=None, method="auto", mapper=map):
    lams = np.asarray(lambdas, dtype=float)
    grid = default_grid(spec) if grid is None else grid
    vals = list(mapper(lambda l: sdet_ratio(spec, l, grid, method), lams))
    return ScatteringData(lams, np.array(vals, dtype=complex))


def scattering_phase(sd, refine=None, max_jump=np.pi / 2, max_refine=8):
    """Continuous ``arg s`` along the grid, anchored in ``[0, 2 pi)`` at the smallest lambda.

    A jump larger than ``max_jump`` between neighbours is either refined by
    inserting midpoints computed with ``refine(lam)`` or reported as
    ``UnwrapAmbiguous``.
    """
    lams = list(map(float, sd.lambda_grid))
    vals = list(map(complex, sd.s_values))
    order = np.argsort(lams)
    lams = [lams[i] for i in order]
    vals = [vals[i] for i in order]
    i = 0
    inserted = 0
    while i < len(lams) - 1:
        jump = abs(np.angle(vals[i + 1] / vals[i])) if vals[i] != 0 else np.inf
        if jump > max_jump:
            if refine is None or inserted >= max_refine * len(sd.lambda_grid):
                raise UnwrapAmbiguous(
                    f"phase jumps by {jump:.3f} between lambda={lams[i]} and {lams[i + 1]}")
            mid = 0.5 * (lams[i] + lams[i + 1])
            lams.insert(i + 1, mid)
            vals.insert(i + 1, complex(refine(mid)))
            inserted += 1
            continue
        i += 1
    s = np.array(vals)
    ang = np.unwrap(np.angle(s))
    anchor = np.mod(np.angle(s[0]), 2 * np.pi)
    if anchor > 2 * np.pi - 1e-12:
        # roundoff below the positive real axis belongs to the 0 end of the anchor interval
        anchor -= 2 * np.pi
    ang = ang - ang[0] + anchor
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(s))
    return replace(sd, lambda_grid=np.array(lams), s_values=s, sigma=ang, log_abs=la,
                   meta={**sd.meta, "inserted": inserted})


def homotopy_scan(spec, sp, z_list, grid=None, method="auto", mapper=map):
    """``h(z) = s_{z^m V}(lam)`` over ``z_list``."""
    if not isinstance(spec.kind, SeparableAngular):
        raise ValueError("the homotopy is defined for separable-angular potentials")
    grid = default_grid(spec) if grid is None else grid
    lam = as_point(sp).lam
    return list(mapper(lambda z: sdet_ratio(scale_family(spec, complex(z)), lam, grid, method),
                       list(z_list)))


def _fmt(x):
    return format(float(x), ".17g")


def write_phase_csv(path, sd):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "s_re", "s_im", "sigma"])
        for lam, s, sig in zip(sd.lambda_grid, sd.s_values, sd.sigma):
            w.writerow([_fmt(lam), _fmt(s.real), _fmt(s.imag), _fmt(sig)])


def write_homotopy_csv(path, zs, hs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z_re", "z_im", "h_re", "h_im"])
        for z, h in zip(zs, hs):
            z, h = complex(z), complex(h)
            w.writerow([_fmt(z.real), _fmt(z.imag), _fmt(h.real), _fmt(h.imag)])
