"""Pure-numpy implementations of the hot loops.

Used when the compiled extension is unavailable, or when the environment
variable ``RESONLAB_BACKEND=python`` is set.
"""
import numpy as np


def helmholtz3d_block_row(rho, z, mw, n_theta, lam):
    """First block row of the angle-circulant 3D Helmholtz matrix.

    ``G[s, a, b] = exp(i lam d) / (4 pi d) * mw[b] * h_theta`` where ``d`` is
    the distance from meridional node ``a`` at angle 0 to node ``b`` at angle
    ``2 pi s / n_theta``.  The coincident entries ``s = 0, a = b`` are 0.
    """
    ht = 2 * np.pi / n_theta
    c = np.cos(ht * np.arange(n_theta))
    d2 = (rho[:, None] ** 2 + rho[None, :] ** 2)[None] \
        - 2 * c[:, None, None] * np.outer(rho, rho)[None] \
        + ((z[:, None] - z[None, :]) ** 2)[None]
    d = np.sqrt(np.maximum(d2, 0.0))
    d[0][np.diag_indices(rho.size)] = 1.0
    G = np.exp(1j * lam * d) * (mw * ht)[None, None, :] / (4 * np.pi * d)
    G[0][np.diag_indices(rho.size)] = 0.0
    return G


def helmholtz3d_dense(nodes, weights, lam):
    """Dense ``exp(i lam d)/(4 pi d) * w_k`` with a zero diagonal."""
    diff = nodes[:, None, :] - nodes[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(d, 1.0)
    A = np.exp(1j * lam * d) * weights[None, :] / (4 * np.pi * d)
    np.fill_diagonal(A, 0.0)
    return A


def mode_step(up, u, un, vdt2, w, has_src, cp, cm, inv1pa, ch, dt2, i1, k0, k1):
    """One leapfrog step of a single angular mode on the (rho, x') grid.

    Updates ``un[:i1, k0:k1]`` in place.  Neighbours outside the array are 0.
    """
    nr, nz = u.shape
    i1 = min(i1, nr)
    k0 = max(k0, 0)
    k1 = min(k1, nz)
    pad = np.zeros((i1 + 2, k1 - k0 + 2), dtype=complex)
    hi = min(i1 + 1, nr)
    klo, khi = max(k0 - 1, 0), min(k1 + 1, nz)
    pad[1:hi + 1, 1 + klo - k0:1 + khi - k0] = u[:hi, klo:khi]
    uc = pad[1:-1, 1:-1]
    lap = (cp[:i1, None] * (pad[2:, 1:-1] - uc) - cm[:i1, None] * (uc - pad[:-2, 1:-1])
           + ch * (pad[1:-1, 2:] - 2.0 * uc + pad[1:-1, :-2]))
    val = 2.0 * uc + dt2 * lap
    if has_src:
        val = val - vdt2[:i1, k0:k1] * w[:i1, k0:k1]
    un[:i1, k0:k1] = val * inv1pa[:i1, None] - up[:i1, k0:k1]


def line_step(up, u, un, vdt2, c2, i0, i1):
    """One leapfrog step of ``u_tt = u_xx - V u`` on ``[i0, i1)``."""
    n = u.shape[0]
    i0, i1 = max(i0, 0), min(i1, n)
    pad = np.zeros(i1 - i0 + 2, dtype=complex)
    lo, hi = max(i0 - 1, 0), min(i1 + 1, n)
    pad[1 + lo - i0:1 + hi - i0] = u[lo:hi]
    uc = pad[1:-1]
    un[i0:i1] = 2.0 * uc - up[i0:i1] + c2 * (pad[:-2] - 2.0 * uc + pad[2:]) - vdt2[i0:i1] * uc
