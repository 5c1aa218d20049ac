"""Skip-gram negative-sampling training and co-occurrence counting.

Training runs through the kernel backend selected in `semie._kernels`
(compiled if available).  Single-threaded runs are deterministic for a
fixed seed; multi-worker runs share the parameter matrices without
locks, which is tolerated by contract but not reproducible.
"""

from __future__ import annotations

import concurrent.futures
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .corpus import Corpus, Vocab
from .embeddings import EmbeddingMatrix

__all__ = [
    "TrainConfig",
    "TrainStats",
    "train",
    "cooccurrence",
    "pair_objective",
    "pair_gradients",
    "corpus_objective",
]

NEG_TABLE_SIZE = 1 << 20
NEG_POWER = 0.75


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for SGNS training.

    The defaults are the usual word2vec settings.  `workers=1` is the
    deterministic mode; with more workers, shards update the shared
    matrices concurrently and results vary run to run.
    """

    dim: int
    window: int = 5
    negative: int = 5
    epochs: int = 5
    alpha: float = 0.025
    subsample: float = 1e-3
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negative < 1 or self.epochs < 1:
            raise ValueError("dim, window, negative, and epochs must be positive")
        if self.alpha <= 0 or self.subsample <= 0:
            raise ValueError("alpha and subsample must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class TrainStats:
    """Per-epoch diagnostics recorded during training."""

    train_loss: list[float] = field(default_factory=list)
    heldout_loss: list[float] = field(default_factory=list)
    heldout_docs: int = 0
    backend: str = _kernels.BACKEND


def _encode_corpus(corpus: Corpus, vocab: Vocab) -> list[np.ndarray]:
    docs = []
    for doc in corpus:
        ids = vocab.encode(doc.tokens)
        if ids:
            docs.append(np.asarray(ids, dtype=np.int32))
    return docs


def _flatten(docs: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(docs) + 1, dtype=np.int64)
    np.cumsum([len(d) for d in docs], out=offsets[1:])
    tokens = (
        np.concatenate(docs).astype(np.int32)
        if docs else np.zeros(0, dtype=np.int32)
    )
    return tokens, offsets


def _negative_table(counts: np.ndarray) -> np.ndarray:
    """Unigram^0.75 sampling table."""
    weights = counts.astype(np.float64) ** NEG_POWER
    cum = np.cumsum(weights)
    cum /= cum[-1]
    ticks = (np.arange(NEG_TABLE_SIZE) + 0.5) / NEG_TABLE_SIZE
    return np.searchsorted(cum, ticks).astype(np.int32)


def _keep_probabilities(vocab: Vocab, subsample: float) -> np.ndarray:
    """word2vec keep probability sqrt(t/f) + t/f, clipped to 1.

    Anchor tokens are never subsampled: their infused count is
    deliberately logarithmic in document length and must survive.
    """
    counts = np.asarray(vocab.counts, dtype=np.float64)
    freq = counts / counts.sum()
    with np.errstate(divide="ignore"):
        keep = np.sqrt(subsample / freq) + subsample / freq
    keep = np.minimum(keep, 1.0)
    if vocab.anchor_ids:
        keep[list(vocab.anchor_ids)] = 1.0
    return keep


def pair_objective(center: np.ndarray, context: np.ndarray,
                   negatives: np.ndarray) -> float:
    """SGNS objective for one (center, context, negatives) sample:
    -log sigma(v.u_c) - sum_n log sigma(-v.u_n)."""
    pos = float(center @ context)
    loss = np.logaddexp(0.0, -pos)
    if len(negatives):
        loss += np.logaddexp(0.0, negatives @ center).sum()
    return float(loss)


def pair_gradients(center: np.ndarray, context: np.ndarray,
                   negatives: np.ndarray):
    """Analytic gradients of `pair_objective`.

    Returns (g_center, g_context, g_negatives); the training kernels
    apply exactly -alpha times these.
    """
    sig_pos = 1.0 / (1.0 + np.exp(-float(center @ context)))
    g_center = -(1.0 - sig_pos) * context
    g_context = -(1.0 - sig_pos) * center
    g_negatives = np.zeros_like(negatives)
    if len(negatives):
        sig_neg = 1.0 / (1.0 + np.exp(-(negatives @ center)))
        g_center = g_center + sig_neg @ negatives
        g_negatives = sig_neg[:, None] * center[None, :]
    return g_center, g_context, g_negatives


def corpus_objective(docs: list[np.ndarray], syn0: np.ndarray, syn1: np.ndarray,
                     window: int, negative: int, neg_table: np.ndarray,
                     seed: int) -> float:
    """Mean SGNS pair objective over documents, without updates.

    Uses the full (unreduced) window, no subsampling, and negatives
    drawn from a generator seeded independently of training, so the
    same parameters always score the same.
    """
    rng = np.random.default_rng(seed)
    total = 0.0
    pairs = 0
    for ids in docs:
        n = len(ids)
        for pos in range(n):
            lo = max(0, pos - window)
            hi = min(n - 1, pos + window)
            for cpos in range(lo, hi + 1):
                if cpos == pos:
                    continue
                negs = neg_table[rng.integers(0, len(neg_table), size=negative)]
                negs = negs[negs != ids[cpos]]
                total += pair_objective(syn0[ids[pos]], syn1[ids[cpos]],
                                        syn1[negs])
                pairs += 1
    return total / max(pairs, 1)


def train(corpus: Corpus, vocab: Vocab, cfg: TrainConfig,
          return_stats: bool = False):
    """Train SGNS embeddings on the corpus; returns the input vectors.

    Out-of-vocabulary tokens are skipped.  One percent of documents
    (when the corpus has at least 100) is held out and scored after
    every epoch with `corpus_objective`; the per-epoch curve lands in
    `TrainStats`.  With `return_stats=True`, returns
    (EmbeddingMatrix, TrainStats).
    """
    n_vocab = len(vocab)
    if cfg.dim >= n_vocab:
        raise ValueError(
            f"embedding dim {cfg.dim} must be smaller than vocabulary size {n_vocab}"
        )
    docs = _encode_corpus(corpus, vocab)
    if not docs:
        raise ValueError("no trainable documents (all tokens out of vocabulary)")

    n_held = len(docs) // 100 if len(docs) >= 100 else 0
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(docs))
    held = [docs[i] for i in order[:n_held]]
    train_docs = [docs[i] for i in order[n_held:]]

    syn0 = (rng.random((n_vocab, cfg.dim)) - 0.5) / cfg.dim
    syn1 = np.zeros((n_vocab, cfg.dim), dtype=np.float64)
    neg_table = _negative_table(np.asarray(vocab.counts))
    keep_prob = _keep_probabilities(vocab, cfg.subsample)

    workers = cfg.workers
    if workers > 1 and not _kernels.COMPILED:
        warnings.warn("pure-Python kernel runs a single worker; forcing workers=1")
        workers = 1

    shards = [train_docs[w::workers] for w in range(workers)]
    flat = [_flatten(s) for s in shards]
    total_tokens = sum(len(d) for d in train_docs)
    total_planned = max(1, cfg.epochs * total_tokens)

    stats = TrainStats(heldout_docs=n_held)
    processed = [0] * workers
    eval_seed = int(rng.integers(0, 2**31 - 1))
    for epoch in range(cfg.epochs):
        loss_sum = 0.0
        pair_count = 0
        if workers == 1:
            tokens, offsets = flat[0]
            processed[0], loss, pairs = _kernels.train_epoch(
                tokens, offsets, syn0, syn1, keep_prob, neg_table,
                cfg.window, cfg.negative, cfg.alpha,
                total_planned, processed[0],
                _worker_seed(cfg.seed, epoch, 0))
            loss_sum, pair_count = loss, pairs
        else:
            with concurrent.futures.ThreadPoolExecutor(workers) as pool:
                futs = [
                    pool.submit(_kernels.train_epoch,
                                flat[w][0], flat[w][1], syn0, syn1,
                                keep_prob, neg_table,
                                cfg.window, cfg.negative, cfg.alpha,
                                total_planned, processed[w],
                                _worker_seed(cfg.seed, epoch, w))
                    for w in range(workers)
                ]
                for w, fut in enumerate(futs):
                    processed[w], loss, pairs = fut.result()
                    loss_sum += loss
                    pair_count += pairs
        stats.train_loss.append(loss_sum / max(pair_count, 1))
        if held:
            stats.heldout_loss.append(corpus_objective(
                held, syn0, syn1, cfg.window, cfg.negative, neg_table,
                eval_seed))

    emb = EmbeddingMatrix(vocab.id_to_token, syn0)
    return (emb, stats) if return_stats else emb


def _worker_seed(seed: int, epoch: int, worker: int) -> int:
    mix = np.random.SeedSequence([seed, epoch, worker]).generate_state(1, np.uint64)
    return int(mix[0]) or 1


def cooccurrence(corpus: Corpus, vocab: Vocab, window: int) -> sp.csr_matrix:
    """Symmetric within-window co-occurrence counts, weighted 1/offset.

    Entry (i, j) sums 1/|p-q| over all within-document position pairs
    p != q with |p-q| <= window where token i sits at p and j at q.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(vocab)
    docs = _encode_corpus(corpus, vocab)
    rows, cols, vals = [], [], []
    for ids in docs:
        for k in range(1, min(window, len(ids) - 1) + 1):
            rows.append(ids[:-k])
            cols.append(ids[k:])
            vals.append(np.full(len(ids) - k, 1.0 / k))
    if not rows:
        return sp.csr_matrix((n, n))
    forward = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return forward + forward.T
