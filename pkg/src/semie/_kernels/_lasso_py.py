"""Pure-Python non-negative lasso coordinate-descent kernel.

Portable fallback for `semie._kernels._lasso_cy` and its arithmetic
reference.  Rows are independent problems, so this version sweeps each
coordinate for all still-active rows at once with numpy; the compiled
version solves row by row.  Per-row operation order is identical, so
results are bit-for-bit equal.  Keep the two in lockstep when editing.

Solves, per row e of E with codes s >= 0 and dictionary D (K x d):

    min_s  ||e - s D||^2 + l1 * sum(s)

given the precomputed correlations C = E D^T, Gram G = D D^T, and row
energies ee = ||e||^2.  The objective is tracked exactly through the
per-update decrease of each exact coordinate minimization, which makes
the stopping rule a true objective tolerance.
"""

from __future__ import annotations

import numpy as np


def nn_lasso(C, G, ee, l1, tol, max_sweeps, S_init=None):
    """Returns (S, obj, sweeps): codes, final per-row objective
    (reconstruction + l1 term), and per-row sweep counts."""
    R, K = C.shape
    half_l1 = l1 / 2.0
    gdiag = np.ascontiguousarray(np.diagonal(G))

    if S_init is None:
        S = np.zeros((R, K), dtype=np.float64)
        rho = C.copy()
    else:
        S = np.array(S_init, dtype=np.float64, copy=True)
        rho = C.copy()
        for k in range(K):
            col = S[:, k]
            nz = col != 0.0
            if nz.any():
                rho[nz] -= col[nz, None] * G[k]

    # obj = ee - s.c - s.rho + l1*sum(s)  (uses s G s^T = s.c - s.rho)
    sc = np.zeros(R)
    srho = np.zeros(R)
    ssum = np.zeros(R)
    for k in range(K):
        sc += S[:, k] * C[:, k]
        srho += S[:, k] * rho[:, k]
        ssum += S[:, k]
    obj = ee - sc - srho + l1 * ssum

    sweeps = np.zeros(R, dtype=np.int64)
    active = np.arange(R)
    for sweep in range(max_sweeps):
        dec = np.zeros(len(active))
        rho_a = rho[active]
        S_a = S[active]
        for k in range(K):
            gkk = gdiag[k]
            sk = S_a[:, k]
            num = rho_a[:, k] + sk * gkk
            xraw = (num - half_l1) / gkk
            xn = np.where(xraw > 0.0, xraw, 0.0)
            delta = xn - sk
            diff = sk - xn
            dec += gkk * (sk * sk - xn * xn) - 2.0 * num * diff + l1 * diff
            S_a[:, k] = xn
            ch = delta != 0.0
            if ch.any():
                rho_a[ch] -= delta[ch, None] * G[k]
        rho[active] = rho_a
        S[active] = S_a
        obj[active] -= dec
        sweeps[active] = sweep + 1
        keep = dec > tol * np.maximum(1.0, np.abs(obj[active]))
        active = active[keep]
        if active.size == 0:
            break

    return S, obj, sweeps
