"""Dense embedding matrix with row-token binding and text serialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["EmbeddingMatrix", "save_embeddings", "load_embeddings"]


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A (rows x dim) real matrix where each row is bound to a token.

    Rows must be finite; construction rejects NaN/Inf.
    """

    tokens: tuple[str, ...]
    vectors: np.ndarray
    token_to_row: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vec = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if vec.ndim != 2 or vec.shape[0] != len(self.tokens):
            raise ValueError(
                f"vectors must be 2-D with one row per token, got {vec.shape} "
                f"for {len(self.tokens)} tokens"
            )
        if not np.isfinite(vec).all():
            raise ValueError("embedding matrix contains non-finite values")
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(
            self, "token_to_row", {t: i for i, t in enumerate(self.tokens)}
        )

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_row

    def row(self, token: str) -> int:
        try:
            return self.token_to_row[token]
        except KeyError:
            raise KeyError(f"token {token!r} not in embedding matrix") from None

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.row(token)]

    def drop(self, tokens) -> "EmbeddingMatrix":
        """New matrix without the given tokens (used to remove anchor rows)."""
        gone = set(tokens)
        keep = [i for i, t in enumerate(self.tokens) if t not in gone]
        return EmbeddingMatrix(
            tuple(self.tokens[i] for i in keep), self.vectors[keep].copy()
        )

    def nearest(self, token: str, k: int = 10) -> list[tuple[str, float]]:
        """k nearest neighbors by cosine similarity, excluding the token itself."""
        v = self.vector(token)
        norms = np.linalg.norm(self.vectors, axis=1)
        denom = norms * max(np.linalg.norm(v), 1e-300)
        sims = (self.vectors @ v) / np.where(denom == 0, 1e-300, denom)
        sims[self.row(token)] = -np.inf
        top = np.argsort(-sims, kind="stable")[:k]
        return [(self.tokens[i], float(sims[i])) for i in top]


def save_embeddings(emb: EmbeddingMatrix, path: str) -> None:
    """Text format: header `rows dim`, then `token v1 ... vd` per line.

    Values are written with 9 significant digits, which round-trips
    losslessly through load/save.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(emb)} {emb.dim}\n")
        for tok, row in zip(emb.tokens, emb.vectors):
            fh.write(tok + " " + " ".join(f"{x:.9g}" for x in row) + "\n")


def load_embeddings(path: str) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected `rows dim` header")
        rows, dim = int(header[0]), int(header[1])
        tokens: list[str] = []
        vectors = np.empty((rows, dim), dtype=np.float64)
        for i in range(rows):
            parts = fh.readline().split()
            if len(parts) != dim + 1:
                raise ValueError(f"{path}: row {i} has {len(parts) - 1} values, expected {dim}")
            tokens.append(parts[0])
            vectors[i] = [float(x) for x in parts[1:]]
    return EmbeddingMatrix(tuple(tokens), vectors)
