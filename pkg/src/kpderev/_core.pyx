# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-bin filtering kernels.

Both kernels walk a bins-major grid (one row per frequency bin) and run
the same recursions as the Python reference, with the inverse update
fused over the upper triangle and mirrored, which preserves Hermitian
symmetry exactly. All loops run without the GIL so the caller may split
the bin range across threads.
"""

from libc.math cimport isfinite
from libc.string cimport memmove, memset

import numpy as np


cdef inline bint _bad(double complex v) noexcept nogil:
    return not (isfinite(v.real) and isfinite(v.imag))


cdef inline void _rls_update(double complex* phi, double complex* g,
                             double complex* x, double complex* u,
                             int n, double alpha, double lam,
                             double complex err, double cap) noexcept nogil:
    """One weighted RLS step: updates phi (n x n, Hermitian) and g in place."""
    cdef int i, j
    cdef double complex acc, ki, v, ec
    cdef double beta = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc = acc + phi[i * n + j] * x[j]
        u[i] = acc
    for i in range(n):
        beta += (x[i].conjugate() * u[i]).real
    cdef double inv_den = 1.0 / (alpha * lam + beta)
    cdef double inv_alpha = 1.0 / alpha
    ec = err.conjugate()
    for i in range(n):
        g[i] = g[i] + (u[i] * inv_den) * ec
    for i in range(n):
        ki = u[i] * inv_den
        for j in range(i, n):
            v = (phi[i * n + j] - ki * u[j].conjugate()) * inv_alpha
            phi[i * n + j] = v
            phi[j * n + i] = v.conjugate()
    # anti-windup bound on the largest diagonal entry
    cdef double peak = 0.0
    cdef double scale
    for i in range(n):
        if phi[i * n + i].real > peak:
            peak = phi[i * n + i].real
    if peak > cap:
        scale = cap / peak
        for i in range(n * n):
            phi[i] = phi[i] * scale


cdef inline void _reset_state(double complex* phi, double complex* g,
                              double complex* hist, int n, int k) noexcept nogil:
    cdef int i
    memset(phi, 0, n * n * sizeof(double complex))
    for i in range(n):
        phi[i * n + i] = 1.0
    memset(g, 0, n * sizeof(double complex))
    g[0] = 1.0
    if hist != NULL:
        memset(hist, 0, k * sizeof(double complex))


def fcp_grid(double complex[:, ::1] y, double complex[:, ::1] s,
             double[:, ::1] lam, int k, double alpha, double cap,
             int f_lo, int f_hi, double complex[:, ::1] out):
    """Full-filter kernel over bins [f_lo, f_hi). Returns -1 on success or
    frame * n_bins + bin of the first non-finite output."""
    cdef int n_bins = y.shape[0]
    cdef int n_frames = y.shape[1]
    scratch_phi = np.empty(k * k, dtype=np.complex128)
    scratch_g = np.empty(k, dtype=np.complex128)
    scratch_h = np.empty(k, dtype=np.complex128)
    scratch_u = np.empty(k, dtype=np.complex128)
    cdef double complex[::1] phi_v = scratch_phi
    cdef double complex[::1] g_v = scratch_g
    cdef double complex[::1] h_v = scratch_h
    cdef double complex[::1] u_v = scratch_u
    cdef double complex* phi = &phi_v[0]
    cdef double complex* g = &g_v[0]
    cdef double complex* hist = &h_v[0]
    cdef double complex* u = &u_v[0]
    cdef int f, t, j
    cdef double complex err, acc, val
    cdef long long fail = -1
    with nogil:
        for f in range(f_lo, f_hi):
            _reset_state(phi, g, hist, k, k)
            for t in range(n_frames):
                memmove(hist + 1, hist, (k - 1) * sizeof(double complex))
                hist[0] = s[f, t]
                acc = 0.0
                for j in range(k):
                    acc = acc + g[j].conjugate() * hist[j]
                err = y[f, t] - acc
                _rls_update(phi, g, hist, u, k, alpha, lam[f, t], err, cap)
                acc = 0.0
                for j in range(k):
                    acc = acc + g[j].conjugate() * hist[j]
                val = s[f, t] + y[f, t] - acc
                if _bad(val):
                    fail = <long long> t * n_bins + f
                    break
                out[f, t] = val
            if fail >= 0:
                break
    return fail


def kpfcp_grid(double complex[:, ::1] y, double complex[:, ::1] s,
               double[:, ::1] lam, int p, int k1, int k2,
               double alpha1, double alpha2, double cap,
               int f_lo, int f_hi, double complex[:, ::1] out):
    """Kronecker-factored kernel over bins [f_lo, f_hi). Same return
    convention as fcp_grid."""
    cdef int n_bins = y.shape[0]
    cdef int n_frames = y.shape[1]
    cdef int k = k1 * k2
    cdef int n1 = p * k1
    cdef int n2 = p * k2
    cdef int nmax = n1 if n1 > n2 else n2
    scratch = np.empty(n1 * n1 + n2 * n2 + n1 + n2 + k + n1 + n2 + nmax,
                       dtype=np.complex128)
    cdef double complex[::1] buf = scratch
    cdef double complex* phi2 = &buf[0]
    cdef double complex* phi1 = phi2 + n1 * n1
    cdef double complex* g1 = phi1 + n2 * n2
    cdef double complex* g2 = g1 + n1
    cdef double complex* hist = g2 + n2
    cdef double complex* s2 = hist + k
    cdef double complex* s1 = s2 + n1
    cdef double complex* u = s1 + n2
    cdef int f, t, j, pi, i1, i2
    cdef double complex err1, err2, acc, c, val
    cdef long long fail = -1
    with nogil:
        for f in range(f_lo, f_hi):
            _reset_state(phi2, g1, hist, n1, k)
            _reset_state(phi1, g2, NULL, n2, 0)
            # second bank starts with a distinct unit vector per block
            memset(g2, 0, n2 * sizeof(double complex))
            for pi in range(p):
                g2[pi * k2 + pi] = 1.0
            for t in range(n_frames):
                memmove(hist + 1, hist, (k - 1) * sizeof(double complex))
                hist[0] = s[f, t]

                # s2 block p = S conj(g2_p), with S[i1, i2] = hist[i2*k1 + i1]
                memset(s2, 0, n1 * sizeof(double complex))
                for pi in range(p):
                    for i2 in range(k2):
                        c = g2[pi * k2 + i2].conjugate()
                        for i1 in range(k1):
                            s2[pi * k1 + i1] = s2[pi * k1 + i1] + c * hist[i2 * k1 + i1]
                acc = 0.0
                for j in range(n1):
                    acc = acc + g1[j].conjugate() * s2[j]
                err1 = y[f, t] - acc
                _rls_update(phi2, g1, s2, u, n1, alpha1, lam[f, t], err1, cap)

                # s1 block p = S^T conj(g1_p) with the updated first bank
                for pi in range(p):
                    for i2 in range(k2):
                        acc = 0.0
                        for i1 in range(k1):
                            acc = acc + g1[pi * k1 + i1].conjugate() * hist[i2 * k1 + i1]
                        s1[pi * k2 + i2] = acc
                acc = 0.0
                for j in range(n2):
                    acc = acc + g2[j].conjugate() * s1[j]
                err2 = y[f, t] - acc
                _rls_update(phi1, g2, s1, u, n2, alpha2, lam[f, t], err2, cap)

                acc = 0.0
                for j in range(n2):
                    acc = acc + g2[j].conjugate() * s1[j]
                val = s[f, t] + y[f, t] - acc
                if _bad(val):
                    fail = <long long> t * n_bins + f
                    break
                out[f, t] = val
            if fail >= 0:
                break
    return fail
