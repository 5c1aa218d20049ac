# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled non-negative lasso coordinate-descent kernel.

Bit-for-bit twin of `semie._kernels._lasso_py`; see that module for the
problem statement and objective-tracking scheme.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def nn_lasso(double[:, ::1] C, double[:, ::1] G, double[::1] ee,
             double l1, double tol, int max_sweeps, S_init=None):
    """Same contract as the pure-Python `nn_lasso`."""
    cdef Py_ssize_t R = C.shape[0]
    cdef Py_ssize_t K = C.shape[1]
    cdef double half_l1 = l1 / 2.0

    if S_init is None:
        S_arr = np.zeros((R, K), dtype=np.float64)
    else:
        S_arr = np.array(S_init, dtype=np.float64, copy=True)
    obj_arr = np.empty(R, dtype=np.float64)
    sweeps_arr = np.zeros(R, dtype=np.int64)
    rho_arr = np.empty(K, dtype=np.float64)

    cdef double[:, ::1] S = S_arr
    cdef double[::1] obj = obj_arr
    cdef cnp.int64_t[::1] sweeps = sweeps_arr
    cdef double[::1] rho = rho_arr

    cdef Py_ssize_t r, k, j
    cdef int sweep
    cdef double sc, srho, ssum, o, dec, gkk, sk, num, xraw, xn, delta, diff, thresh

    with nogil:
        for r in range(R):
            for j in range(K):
                rho[j] = C[r, j]
            for k in range(K):
                if S[r, k] != 0.0:
                    for j in range(K):
                        rho[j] -= S[r, k] * G[k, j]

            sc = 0.0
            srho = 0.0
            ssum = 0.0
            for k in range(K):
                sc += S[r, k] * C[r, k]
                srho += S[r, k] * rho[k]
                ssum += S[r, k]
            o = ee[r] - sc - srho + l1 * ssum

            for sweep in range(max_sweeps):
                dec = 0.0
                for k in range(K):
                    gkk = G[k, k]
                    sk = S[r, k]
                    num = rho[k] + sk * gkk
                    xraw = (num - half_l1) / gkk
                    if xraw > 0.0:
                        xn = xraw
                    else:
                        xn = 0.0
                    delta = xn - sk
                    diff = sk - xn
                    dec += gkk * (sk * sk - xn * xn) - 2.0 * num * diff + l1 * diff
                    S[r, k] = xn
                    if delta != 0.0:
                        for j in range(K):
                            rho[j] -= delta * G[k, j]
                o -= dec
                sweeps[r] = sweep + 1
                thresh = fabs(o)
                if thresh < 1.0:
                    thresh = 1.0
                if dec <= tol * thresh:
                    break
            obj[r] = o

    return S_arr, obj_arr, sweeps_arr
