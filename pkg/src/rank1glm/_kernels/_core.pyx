# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled rank-one objective/gradient kernel.

Single fused pass per solver iteration: residual, objective and all
three gradients, backed by BLAS dgemv. The design matrix is passed
C-contiguous and addressed through its Fortran-order transpose, so no
copies are made.
"""

import numpy as np

from scipy.linalg.cython_blas cimport ddot, dgemv


def rank1_obj_grad(double[:, ::1] X, double[:, ::1] P, double[::1] y,
                   double[::1] alpha, double[::1] beta, double[::1] w):
    """See rank1glm._kernels._py.rank1_obj_grad for the contract."""
    cdef int n = X.shape[0]
    cdef int m = X.shape[1]
    cdef int q = P.shape[1]
    cdef int t = alpha.shape[0]
    cdef int p = beta.shape[0]
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    cdef int j, k

    v_arr = np.empty(m)
    d_arr = np.empty(n)
    g_arr = np.empty(m)
    ga_arr = np.zeros(t)
    gb_arr = np.empty(p)
    gw_arr = np.empty(q)
    cdef double[::1] v = v_arr
    cdef double[::1] d = d_arr
    cdef double[::1] g = g_arr
    cdef double[::1] ga = ga_arr
    cdef double[::1] gb = gb_arr
    cdef double[::1] gw = gw_arr

    for j in range(p):
        for k in range(t):
            v[j * t + k] = beta[j] * alpha[k]
    for j in range(n):
        d[j] = -y[j]

    # C-contiguous X viewed as Fortran-order X^T (m x n, lda = m).
    dgemv("T", &m, &n, &one, &X[0, 0], &m, &v[0], &inc, &one, &d[0], &inc)
    if q > 0:
        dgemv("T", &q, &n, &one, &P[0, 0], &q, &w[0], &inc, &one, &d[0], &inc)

    cdef double obj = 0.5 * ddot(&n, &d[0], &inc, &d[0], &inc)

    dgemv("N", &m, &n, &one, &X[0, 0], &m, &d[0], &inc, &zero, &g[0], &inc)
    for j in range(p):
        gb[j] = ddot(&t, &alpha[0], &inc, &g[j * t], &inc)
        for k in range(t):
            ga[k] += beta[j] * g[j * t + k]
    if q > 0:
        dgemv("N", &q, &n, &one, &P[0, 0], &q, &d[0], &inc, &zero, &gw[0], &inc)

    return obj, ga_arr, gb_arr, gw_arr
