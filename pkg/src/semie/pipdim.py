"""Embedding dimensionality selection via pairwise-inner-product loss.

The signal matrix is the positive PMI of the window co-occurrence
counts.  Its spectrum, together with a half-split estimate of the
per-entry noise level, feeds a seeded Monte-Carlo estimate of the PIP
loss between the full signal embedding and a d-dimensional spectral
embedding estimated from a noisy matrix; the selected dimensionality
minimizes that estimate.

Because the PIP loss is unitary-invariant, the simulation runs in the
eigenbasis of the signal spectrum (a diagonal matrix plus i.i.d. noise),
which only needs the singular values, never the vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, Vocab
from .sgns import _encode_corpus, cooccurrence

__all__ = [
    "SpectralEstimate",
    "pip_loss",
    "signal_matrix",
    "estimate_noise",
    "randomized_svd",
    "spectral_estimate",
    "pip_loss_curve",
    "optimal_dimension",
    "select_dimension",
]

DENSE_SVD_MAX = 512      # below this side length, use exact dense SVD
NOISE_SIM_MAX = 1024     # cap on the simulated noise-matrix side


def pip_loss(E: np.ndarray, Ehat: np.ndarray) -> float:
    """Frobenius norm of E E^T - Ehat Ehat^T."""
    E = np.asarray(E, dtype=np.float64)
    Ehat = np.asarray(Ehat, dtype=np.float64)
    if E.shape[0] != Ehat.shape[0]:
        raise ValueError(
            f"row-count mismatch: {E.shape[0]} vs {Ehat.shape[0]}"
        )
    return float(np.linalg.norm(E @ E.T - Ehat @ Ehat.T, "fro"))


def signal_matrix(cooc) -> sp.csr_matrix:
    """Positive pointwise mutual information of a symmetric count matrix.

    PMI(i, j) = log(c_ij * total / (row_i * col_j)), clamped at zero;
    zero counts stay zero.
    """
    coo = sp.coo_matrix(cooc, dtype=np.float64)
    total = coo.sum()
    if total <= 0:
        raise ValueError("co-occurrence matrix is all zero")
    row_sums = np.asarray(coo.sum(axis=1)).ravel()
    col_sums = np.asarray(coo.sum(axis=0)).ravel()
    denom = row_sums[coo.row] * col_sums[coo.col]
    pmi = np.log(coo.data * total / denom)
    keep = pmi > 0
    out = sp.coo_matrix(
        (pmi[keep], (coo.row[keep], coo.col[keep])), shape=coo.shape
    )
    return out.tocsr()


def estimate_noise(corpus: Corpus, vocab: Vocab, window: int, seed: int,
                   shuffle: bool = True) -> float:
    """Half-split estimate of the per-entry noise scale of the signal matrix.

    Documents are split into alternating halves (of a seeded shuffle by
    default; of file order with shuffle=False) and sigma is
    ||S1 - S2||_F / (2 sqrt(#entries of one half's matrix)).  Each half
    carries sqrt(2) times the noise of the full matrix, so this targets
    the full-corpus signal matrix that `spectral_estimate` decomposes.
    """
    docs = corpus.documents
    if len(docs) < 2:
        raise ValueError("noise estimation needs at least 2 documents")
    order = np.arange(len(docs))
    if shuffle:
        order = np.random.default_rng(seed).permutation(len(docs))
    half1 = Corpus(tuple(docs[i] for i in order[0::2]))
    half2 = Corpus(tuple(docs[i] for i in order[1::2]))

    seen1 = {t for d in _encode_corpus(half1, vocab) for t in d.tolist()}
    seen2 = {t for d in _encode_corpus(half2, vocab) for t in d.tolist()}
    if not seen1 & seen2:
        raise ValueError("corpus halves share no vocabulary tokens")

    s1 = signal_matrix(cooccurrence(half1, vocab, window))
    s2 = signal_matrix(cooccurrence(half2, vocab, window))
    diff = (s1 - s2)
    n_entries = s1.shape[0] * s1.shape[1]
    return float(sp.linalg.norm(diff, "fro") / (2.0 * math.sqrt(n_entries)))


def randomized_svd(A, k: int, n_iter: int = 8, oversample: int = 10,
                   seed: int = 0):
    """Truncated SVD by a randomized range finder with power iterations.

    Re-orthonormalizes between power iterations for stability; accurate
    to well under 1e-3 relative on the leading singular values.
    """
    n_rows, n_cols = A.shape
    rank_cap = min(n_rows, n_cols)
    k = min(k, rank_cap)
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal((n_cols, min(k + oversample, rank_cap)))
    Q, _ = np.linalg.qr(A @ probe)
    for _ in range(n_iter):
        Z, _ = np.linalg.qr(A.T @ Q)
        Q, _ = np.linalg.qr(A @ Z)
    B = Q.T @ (A.toarray() if sp.issparse(A) else A)
    Ub, svals, Vt = np.linalg.svd(B, full_matrices=False)
    return (Q @ Ub)[:, :k], svals[:k], Vt[:k]


@dataclass(frozen=True)
class SpectralEstimate:
    """Spectrum of the signal matrix plus what PIP estimation needs:
    the noise scale, the symmetrization exponent, the candidate cap,
    and the matrix side length."""

    singular_values: np.ndarray
    sigma: float
    alpha: float
    k_max: int
    side: int

    def __post_init__(self):
        sv = np.asarray(self.singular_values, dtype=np.float64)
        if sv.ndim != 1 or len(sv) == 0:
            raise ValueError("spectrum must be a non-empty 1-D array")
        if (sv < 0).any() or (np.diff(sv) > 1e-9 * max(1.0, sv[0])).any():
            raise ValueError("singular values must be non-negative and non-increasing")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.k_max < 1 or self.side < 1:
            raise ValueError("k_max and side must be positive")
        object.__setattr__(self, "singular_values", sv)

    @property
    def noise_threshold(self) -> float:
        """Soft-threshold level for sigma correction: the spectral bulk
        edge sigma*(sqrt(n)+sqrt(m)) of an i.i.d. noise matrix."""
        return self.sigma * 2.0 * math.sqrt(self.side)


def spectral_estimate(corpus: Corpus, vocab: Vocab, window: int = 5,
                      alpha: float = 0.5, k_max: int = 512,
                      seed: int = 0) -> SpectralEstimate:
    """Build the spectral estimate for a corpus: PPMI spectrum plus the
    half-split noise scale."""
    M = signal_matrix(cooccurrence(corpus, vocab, window))
    n = M.shape[0]
    k = min(k_max, n)
    if n <= DENSE_SVD_MAX:
        svals = np.linalg.svd(M.toarray(), compute_uv=False)[:k]
    else:
        _, svals, _ = randomized_svd(M, k, seed=seed)
    svals = np.maximum(svals, 0.0)
    sigma = estimate_noise(corpus, vocab, window, seed)
    return SpectralEstimate(svals, sigma, alpha, k_max=k, side=n)


def _simulated_curves(est: SpectralEstimate, lam: np.ndarray, d_max: int,
                      n_sim: int, seed: int) -> np.ndarray:
    """Squared PIP-loss curves from seeded noise simulations.

    The clean matrix is diag(lam) embedded in an n x n zero matrix; the
    simulation adds i.i.d. Gaussian noise at the estimated scale,
    soft-thresholds the resulting spectrum at the same bulk edge, and
    scores every truncation d against the clean embedding.
    """
    two_a, four_a = 2.0 * est.alpha, 4.0 * est.alpha
    n_sim_side = min(est.side, NOISE_SIM_MAX)
    scale = est.sigma * math.sqrt(est.side / n_sim_side)
    thr = est.noise_threshold
    r_sig = min(len(lam), n_sim_side)
    lam = lam[:r_sig]
    base = float(np.sum(lam ** four_a))
    d_max = min(d_max, n_sim_side)

    curves = np.empty((n_sim, d_max))
    for s in range(n_sim):
        rng = np.random.default_rng([seed, s])
        M = rng.standard_normal((n_sim_side, n_sim_side)) * scale
        M[:r_sig, :r_sig] += np.diag(lam)
        U, svals, _ = np.linalg.svd(M)
        lam_hat = np.maximum(svals[:d_max] - thr, 0.0)
        align = lam ** two_a @ (U[:r_sig, :d_max] ** 2)
        terms = lam_hat ** four_a - 2.0 * (lam_hat ** two_a) * align
        curves[s] = base + np.cumsum(terms)
    return curves


def pip_loss_curve(est: SpectralEstimate, n_sim: int = 5,
                   seed: int = 0) -> np.ndarray:
    """Estimated PIP loss for every candidate dimensionality.

    Entry d-1 is the loss at dimension d.  With sigma = 0 the curve is
    exact (sqrt of the dropped spectral mass); otherwise it averages
    `n_sim` seeded noise simulations.
    """
    sv = est.singular_values
    d_max = min(est.k_max, len(sv))
    lam = np.maximum(sv - est.noise_threshold, 0.0)
    lam = lam[lam > 0]
    four_a = 4.0 * est.alpha
    if est.sigma == 0.0 or len(lam) == 0:
        # exact curve: only the dropped spectral mass contributes
        mass = (sv if est.sigma == 0.0 else lam) ** four_a
        sq = np.zeros(d_max)
        if len(mass) > 1:
            tail = np.concatenate([mass[::-1].cumsum()[::-1], [0.0]])
            m = min(d_max, len(mass))
            sq[:m] = tail[1:m + 1]
    else:
        sq = _simulated_curves(est, lam, d_max, n_sim, seed).mean(axis=0)
    return np.sqrt(np.maximum(sq, 0.0))


def optimal_dimension(est: SpectralEstimate, n_sim: int = 5,
                      seed: int = 0) -> int:
    """Dimensionality minimizing the estimated PIP loss; ties take the
    smallest dimension."""
    curve = pip_loss_curve(est, n_sim=n_sim, seed=seed)
    return int(np.argmin(curve)) + 1


def select_dimension(corpus: Corpus, vocab: Vocab, window: int = 5,
                     alpha: float = 0.5, k_max: int = 512, seed: int = 0,
                     n_sim: int = 5):
    """Convenience wrapper: estimate the spectrum and pick the dimension.

    Returns (d, curve, estimate)."""
    est = spectral_estimate(corpus, vocab, window=window, alpha=alpha,
                            k_max=k_max, seed=seed)
    curve = pip_loss_curve(est, n_sim=n_sim, seed=seed)
    return int(np.argmin(curve)) + 1, curve, est
