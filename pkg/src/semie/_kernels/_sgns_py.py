"""Pure-Python skip-gram negative-sampling training kernel.

This is the portable fallback for `semie._kernels._sgns_cy` and the
arithmetic reference: both backends perform the identical sequence of
floating-point operations and PRNG draws, so single-threaded results
are bit-for-bit equal.  Keep the two in lockstep when editing.

Per-document draw order (splitmix64 stream):
  1. one uniform per token position (subsampling keep test),
  2. per kept center: one integer draw for the window reduction,
  3. per (center, context) pair: `negative` integer draws for the
     unigram-table lookups; a draw equal to the positive context is
     discarded without replacement.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def _next(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return state, z


def _sigmoid(f: float) -> float:
    if f > 500.0:
        return 1.0
    if f < -500.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(-f))


def _softplus(f: float) -> float:
    """log(1 + exp(f)), stable; -log sigma(-f)."""
    if f > 0.0:
        return f + math.log1p(math.exp(-f))
    return math.log1p(math.exp(f))


def train_epoch(tokens, offsets, syn0, syn1, keep_prob, neg_table,
                window, negative, alpha_start, total_planned,
                processed_before, seed):
    """Run one epoch of SGNS over the documents in `tokens`/`offsets`.

    Mutates syn0 (center/input vectors) and syn1 (context/output
    vectors) in place.  Returns (processed_after, loss_sum, pair_count)
    where loss_sum accumulates the pair objective evaluated just before
    each pair's update.
    """
    dim = syn0.shape[1]
    s0 = syn0.tolist()
    s1 = syn1.tolist()
    kp = keep_prob.tolist()
    table = neg_table.tolist()
    tsize = len(table)
    toks = tokens.tolist()
    offs = offsets.tolist()

    state = seed & _MASK
    processed = processed_before
    loss_sum = 0.0
    pairs = 0
    alpha_floor = alpha_start * 1e-4
    neu1e = [0.0] * dim

    for di in range(len(offs) - 1):
        start, end = offs[di], offs[di + 1]
        alpha = alpha_start * (1.0 - float(processed) / float(total_planned))
        if alpha < alpha_floor:
            alpha = alpha_floor

        kept = []
        for p in range(start, end):
            t = toks[p]
            state, z = _next(state)
            u = (z >> 11) * _INV53
            if u < kp[t]:
                kept.append(t)

        nk = len(kept)
        for pos in range(nk):
            w = kept[pos]
            state, z = _next(state)
            win = window - (z % window)
            lo = pos - win
            if lo < 0:
                lo = 0
            hi = pos + win
            if hi > nk - 1:
                hi = nk - 1
            row_w = s0[w]
            for cpos in range(lo, hi + 1):
                if cpos == pos:
                    continue
                c = kept[cpos]
                for j in range(dim):
                    neu1e[j] = 0.0
                # positive target
                row_t = s1[c]
                f = 0.0
                for j in range(dim):
                    f += row_w[j] * row_t[j]
                loss_sum += _softplus(-f)
                g = (1.0 - _sigmoid(f)) * alpha
                for j in range(dim):
                    neu1e[j] += g * row_t[j]
                    row_t[j] += g * row_w[j]
                pairs += 1
                # negative targets
                for _ in range(negative):
                    state, z = _next(state)
                    tgt = table[z % tsize]
                    if tgt == c:
                        continue
                    row_t = s1[tgt]
                    f = 0.0
                    for j in range(dim):
                        f += row_w[j] * row_t[j]
                    loss_sum += _softplus(f)
                    g = (0.0 - _sigmoid(f)) * alpha
                    for j in range(dim):
                        neu1e[j] += g * row_t[j]
                        row_t[j] += g * row_w[j]
                for j in range(dim):
                    row_w[j] += neu1e[j]
        processed += end - start

    syn0[:] = s0
    syn1[:] = s1
    return processed, loss_sum, pairs
