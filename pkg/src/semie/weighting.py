"""Semantic weighting: turn anchored dense embeddings into their
semantically infused form.

Per column, every token gets a rank under ascending value order.  Each
non-anchor token then receives, from every anchor, the anchor's value in
that column divided by the rank distance between them; the summed
weights are added to the token's entry.  Tokens ranked near an anchor
move toward it, so columns form coherent groups around the anchors.
"""

from __future__ import annotations

import numpy as np

from .embeddings import EmbeddingMatrix
from .infusion import AnchorSet

__all__ = ["column_ranks", "semantic_weight", "infuse_semantics"]


def column_ranks(column: np.ndarray) -> np.ndarray:
    """Rank of every row under ascending value order.

    Ties break by row id ascending, so the permutation is deterministic
    and a bijection.  NaN values are rejected.
    """
    col = np.asarray(column, dtype=np.float64)
    if col.ndim != 1:
        raise ValueError("column must be 1-D")
    if np.isnan(col).any():
        raise ValueError("column contains NaN")
    order = np.argsort(col, kind="stable")
    ranks = np.empty(len(col), dtype=np.int64)
    ranks[order] = np.arange(len(col))
    return ranks


def semantic_weight(anchor_value: float, anchor_rank: int, word_rank: int) -> float:
    """Anchor value divided by the rank distance between anchor and word."""
    if anchor_rank == word_rank:
        raise ValueError("anchor and word cannot share a rank")
    return anchor_value / abs(anchor_rank - word_rank)


def infuse_semantics(emb: EmbeddingMatrix, anchors, aggregate: str = "sum") -> EmbeddingMatrix:
    """Add anchor-derived semantic weights to every non-anchor entry.

    `anchors` is an `AnchorSet` or an iterable of anchor tokens; all of
    them must be rows of `emb`.  With ``aggregate="sum"`` (default) the
    weights from all anchors add up; ``"nearest"`` keeps only the
    rank-closest anchor's weight (ties go to the first anchor in token
    order).  Ranks are computed once per column on the input; anchor
    rows pass through unchanged.
    """
    if aggregate not in ("sum", "nearest"):
        raise ValueError(f"unknown aggregate mode {aggregate!r}")
    anchor_tokens = anchors.tokens if isinstance(anchors, AnchorSet) else tuple(anchors)
    if not anchor_tokens:
        raise ValueError("no anchors given")
    missing = [t for t in anchor_tokens if t not in emb]
    if missing:
        raise KeyError(f"anchor rows missing from embedding matrix: {missing}")

    anchor_rows = np.asarray([emb.row(t) for t in anchor_tokens])
    word_rows = np.setdiff1d(np.arange(len(emb)), anchor_rows)
    out = emb.vectors.copy()
    for col in range(emb.dim):
        ranks = column_ranks(emb.vectors[:, col])
        # distances: one row per anchor, one column per non-anchor word
        dist = np.abs(ranks[anchor_rows][:, None] - ranks[word_rows][None, :])
        weights = emb.vectors[anchor_rows, col][:, None] / dist
        if aggregate == "sum":
            contrib = weights.sum(axis=0)
        else:
            contrib = weights[np.argmin(dist, axis=0), np.arange(len(word_rows))]
        out[word_rows, col] += contrib
    return EmbeddingMatrix(emb.tokens, out)
