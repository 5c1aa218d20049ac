# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled skip-gram negative-sampling training kernel.

Bit-for-bit twin of `semie._kernels._sgns_py`; see that module for the
draw-order contract.  Built with -ffp-contract=off so the arithmetic
matches the pure-Python kernel exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t semie_splitmix64(uint64_t *state) {
        uint64_t z = (*state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    unsigned long long semie_splitmix64(unsigned long long *state) nogil


cdef double _INV53 = 1.0 / 9007199254740992.0


cdef inline double _sigmoid(double f) nogil:
    if f > 500.0:
        return 1.0
    if f < -500.0:
        return 0.0
    return 1.0 / (1.0 + exp(-f))


cdef inline double _softplus(double f) nogil:
    if f > 0.0:
        return f + log1p(exp(-f))
    return log1p(exp(f))


def train_epoch(cnp.int32_t[::1] tokens, cnp.int64_t[::1] offsets,
                double[:, ::1] syn0, double[:, ::1] syn1,
                double[::1] keep_prob, cnp.int32_t[::1] neg_table,
                int window, int negative, double alpha_start,
                long long total_planned, long long processed_before,
                unsigned long long seed):
    """Same contract as the pure-Python `train_epoch`."""
    cdef int dim = syn0.shape[1]
    cdef long long n_docs = offsets.shape[0] - 1
    cdef long long tsize = neg_table.shape[0]
    cdef unsigned long long state = seed
    cdef unsigned long long z
    cdef long long processed = processed_before
    cdef double loss_sum = 0.0
    cdef long long pairs = 0
    cdef double alpha_floor = alpha_start * 1e-4
    cdef double alpha, u, f, g
    cdef long long di, start, end, p
    cdef int nk, pos, lo, hi, cpos, j, n, win
    cdef int t, w, c, tgt

    kept_buf = np.empty(tokens.shape[0] + 1, dtype=np.int32)
    neu_buf = np.zeros(dim, dtype=np.float64)
    cdef cnp.int32_t[::1] kept = kept_buf
    cdef double[::1] neu1e = neu_buf

    with nogil:
        for di in range(n_docs):
            start = offsets[di]
            end = offsets[di + 1]
            alpha = alpha_start * (1.0 - (<double>processed) / (<double>total_planned))
            if alpha < alpha_floor:
                alpha = alpha_floor

            nk = 0
            for p in range(start, end):
                t = tokens[p]
                z = semie_splitmix64(&state)
                u = (<double>(z >> 11)) * _INV53
                if u < keep_prob[t]:
                    kept[nk] = t
                    nk += 1

            for pos in range(nk):
                w = kept[pos]
                z = semie_splitmix64(&state)
                win = window - <int>(z % <unsigned long long>window)
                lo = pos - win
                if lo < 0:
                    lo = 0
                hi = pos + win
                if hi > nk - 1:
                    hi = nk - 1
                for cpos in range(lo, hi + 1):
                    if cpos == pos:
                        continue
                    c = kept[cpos]
                    for j in range(dim):
                        neu1e[j] = 0.0
                    # positive target
                    f = 0.0
                    for j in range(dim):
                        f += syn0[w, j] * syn1[c, j]
                    loss_sum += _softplus(-f)
                    g = (1.0 - _sigmoid(f)) * alpha
                    for j in range(dim):
                        neu1e[j] += g * syn1[c, j]
                        syn1[c, j] += g * syn0[w, j]
                    pairs += 1
                    # negative targets
                    for n in range(negative):
                        z = semie_splitmix64(&state)
                        tgt = neg_table[<long long>(z % <unsigned long long>tsize)]
                        if tgt == c:
                            continue
                        f = 0.0
                        for j in range(dim):
                            f += syn0[w, j] * syn1[tgt, j]
                        loss_sum += _softplus(f)
                        g = (0.0 - _sigmoid(f)) * alpha
                        for j in range(dim):
                            neu1e[j] += g * syn1[tgt, j]
                            syn1[tgt, j] += g * syn0[w, j]
                    for j in range(dim):
                        syn0[w, j] += neu1e[j]
            processed += end - start

    return processed, loss_sum, pairs
