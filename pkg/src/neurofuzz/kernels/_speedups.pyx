# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the NumPy kernels in ``pybackend``.

Same signatures and semantics; loops are fused and run without the GIL.
Floating-point results may differ from the NumPy backend by a few ulp
(libm exp vs SIMD exp), which the cross-backend tests allow for.
"""

from libc.math cimport exp, fmax

import numpy as np

cdef double MF_FLOOR = 5e-324


def memberships(double[:, ::1] X, double[::1] centers, double[::1] sigmas,
                long long[::1] offsets, out=None):
    cdef Py_ssize_t n = X.shape[0], n_inputs = X.shape[1]
    cdef Py_ssize_t total = centers.shape[0]
    if out is None:
        out = np.empty((n, total))
    cdef double[:, ::1] M = out
    cdef Py_ssize_t k, d, t, lo, hi
    cdef double x, z
    with nogil:
        for k in range(n):
            for d in range(n_inputs):
                x = X[k, d]
                lo = <Py_ssize_t> offsets[d]
                hi = <Py_ssize_t> offsets[d + 1]
                for t in range(lo, hi):
                    z = (x - centers[t]) / sigmas[t]
                    M[k, t] = fmax(exp(-0.5 * z * z), MF_FLOOR)
    return out


def firing_strengths(double[:, ::1] M, long long[:, ::1] prem_cols,
                     out=None, tmp=None):
    cdef Py_ssize_t n = M.shape[0]
    cdef Py_ssize_t n_rules = prem_cols.shape[0], n_inputs = prem_cols.shape[1]
    if out is None:
        out = np.empty((n, n_rules))
    cdef double[:, ::1] W = out
    cdef Py_ssize_t k, i, d
    cdef double w
    with nogil:
        for k in range(n):
            for i in range(n_rules):
                w = M[k, <Py_ssize_t> prem_cols[i, 0]]
                for d in range(1, n_inputs):
                    w = w * M[k, <Py_ssize_t> prem_cols[i, d]]
                W[k, i] = w
    return out


def weighted_design(double[:, ::1] wbar, double[:, ::1] xaug, out=None):
    cdef Py_ssize_t n = wbar.shape[0], n_rules = wbar.shape[1]
    cdef Py_ssize_t p = xaug.shape[1]
    if out is None:
        out = np.empty((n, n_rules * p))
    cdef double[:, ::1] A = out
    cdef Py_ssize_t k, i, j, col
    cdef double wv
    with nogil:
        for k in range(n):
            col = 0
            for i in range(n_rules):
                wv = wbar[k, i]
                for j in range(p):
                    A[k, col] = wv * xaug[k, j]
                    col += 1
    return out


def premise_gradient_accum(double[:, ::1] X, double[:, ::1] wbar,
                           double[:, ::1] F, double[::1] Y,
                           double[::1] weights, double[::1] centers,
                           double[::1] sigmas, long long[::1] offsets,
                           long long[:, ::1] prem_cols,
                           out_z=None, out_s=None):
    cdef Py_ssize_t n = X.shape[0], n_inputs = X.shape[1]
    cdef Py_ssize_t n_rules = prem_cols.shape[0]
    cdef Py_ssize_t total = centers.shape[0]
    if out_z is None:
        out_z = np.zeros(total)
    else:
        np.asarray(out_z)[:] = 0.0
    if out_s is None:
        out_s = np.zeros(total)
    else:
        np.asarray(out_s)[:] = 0.0
    cdef double[::1] gz = out_z
    cdef double[::1] gs = out_s
    cdef Py_ssize_t k, i, d, t
    cdef double e, dz, s, u
    with nogil:
        for k in range(n):
            for i in range(n_rules):
                e = (F[k, i] - Y[k]) * wbar[k, i] * weights[k]
                for d in range(n_inputs):
                    t = <Py_ssize_t> prem_cols[i, d]
                    dz = X[k, d] - centers[t]
                    s = sigmas[t]
                    u = dz / (s * s)
                    gz[t] += e * u
                    gs[t] += e * u * dz / s
    return out_z, out_s
