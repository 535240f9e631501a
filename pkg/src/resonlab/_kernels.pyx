# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: Helmholtz kernel assembly and leapfrog time steps.

Semantics match ``_kernels_py`` exactly; see that module for documentation.
"""
import numpy as np
from libc.math cimport sqrt, cos, M_PI

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)


def helmholtz3d_block_row(double[::1] rho, double[::1] z, double[::1] mw,
                          int n_theta, double complex lam):
    cdef Py_ssize_t M = rho.shape[0]
    out = np.empty((n_theta, M, M), dtype=np.complex128)
    cdef double complex[:, :, ::1] G = out
    cdef double ht = 2.0 * M_PI / n_theta
    cdef double complex ilam = 1j * lam
    cdef double c, d, dz, wb
    cdef Py_ssize_t s, a, b
    with nogil:
        for s in range(n_theta):
            c = cos(s * ht)
            for a in range(M):
                for b in range(M):
                    if s == 0 and a == b:
                        G[s, a, b] = 0
                        continue
                    dz = z[a] - z[b]
                    d = sqrt(rho[a] * rho[a] + rho[b] * rho[b]
                             - 2.0 * rho[a] * rho[b] * c + dz * dz)
                    wb = mw[b] * ht / (4.0 * M_PI * d)
                    G[s, a, b] = cexp(ilam * d) * wb
    return out


def helmholtz3d_dense(double[:, ::1] nodes, double[::1] weights, double complex lam):
    cdef Py_ssize_t N = nodes.shape[0]
    out = np.empty((N, N), dtype=np.complex128)
    cdef double complex[:, ::1] A = out
    cdef double complex ilam = 1j * lam
    cdef double dx, dy, dz, d
    cdef Py_ssize_t j, k
    with nogil:
        for j in range(N):
            for k in range(N):
                if j == k:
                    A[j, k] = 0
                    continue
                dx = nodes[j, 0] - nodes[k, 0]
                dy = nodes[j, 1] - nodes[k, 1]
                dz = nodes[j, 2] - nodes[k, 2]
                d = sqrt(dx * dx + dy * dy + dz * dz)
                A[j, k] = cexp(ilam * d) * (weights[k] / (4.0 * M_PI * d))
    return out


def mode_step(double complex[:, ::1] up, double complex[:, ::1] u,
              double complex[:, ::1] un, double complex[:, ::1] vdt2,
              double complex[:, ::1] w, bint has_src,
              double[::1] cp, double[::1] cm, double[::1] inv1pa,
              double ch, double dt2, Py_ssize_t i1, Py_ssize_t k0, Py_ssize_t k1):
    cdef Py_ssize_t nr = u.shape[0], nz = u.shape[1]
    cdef Py_ssize_t i, k
    cdef double complex uc, uip, uim, ukp, ukm, lap, val
    if i1 > nr:
        i1 = nr
    if k0 < 0:
        k0 = 0
    if k1 > nz:
        k1 = nz
    with nogil:
        for i in range(i1):
            for k in range(k0, k1):
                uc = u[i, k]
                uip = u[i + 1, k] if i + 1 < nr else 0
                uim = u[i - 1, k] if i > 0 else 0
                ukp = u[i, k + 1] if k + 1 < nz else 0
                ukm = u[i, k - 1] if k > 0 else 0
                lap = cp[i] * (uip - uc) - cm[i] * (uc - uim) + ch * (ukp - 2.0 * uc + ukm)
                val = 2.0 * uc + dt2 * lap
                if has_src:
                    val = val - vdt2[i, k] * w[i, k]
                un[i, k] = val * inv1pa[i] - up[i, k]


def line_step(double complex[::1] up, double complex[::1] u, double complex[::1] un,
              double complex[::1] vdt2, double c2, Py_ssize_t i0, Py_ssize_t i1):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double complex uc, ul, ur
    if i0 < 0:
        i0 = 0
    if i1 > n:
        i1 = n
    with nogil:
        for i in range(i0, i1):
            uc = u[i]
            ul = u[i - 1] if i > 0 else 0
            ur = u[i + 1] if i + 1 < n else 0
            un[i] = 2.0 * uc - up[i] + c2 * (ul - 2.0 * uc + ur) - vdt2[i] * uc
