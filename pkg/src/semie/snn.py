"""Sparse non-negative transform of dense embeddings.

Dictionary learning with non-negative codes: alternating minimization of

    sum_w ||E_w - S_w D||^2 + l1 * ||S_w||_1 + l2 * ||D||^2
    subject to S >= 0 and unit-norm dictionary atoms,

where E is (rows x d), S is (rows x K), and D is (K x d) with K
typically 10x the dense dimension.  The code step is a per-row
non-negative lasso solved by projected coordinate descent (through the
kernel backend); the dictionary step updates one atom at a time with its
exact constrained minimizer, so the outer objective never increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .embeddings import EmbeddingMatrix

__all__ = [
    "Dictionary",
    "SparseEmbeddingMatrix",
    "FitStats",
    "fit",
    "encode",
    "save_sparse",
    "load_sparse",
]

ZERO_THRESHOLD = 1e-9
ENCODE_TOL = 1e-6
MAX_SWEEPS = 1000


@dataclass(frozen=True)
class Dictionary:
    """K x d matrix of unit-norm atoms."""

    atoms: np.ndarray

    def __post_init__(self):
        atoms = np.ascontiguousarray(self.atoms, dtype=np.float64)
        if atoms.ndim != 2:
            raise ValueError("atoms must be a 2-D matrix")
        object.__setattr__(self, "atoms", atoms)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]


@dataclass
class FitStats:
    """Diagnostics from `fit`: the (non-increasing) outer objective
    trace, relative reconstruction error, and achieved sparsity."""

    objective: list[float] = field(default_factory=list)
    reconstruction_error: float = float("nan")
    sparsity: float = float("nan")
    backend: str = _kernels.BACKEND


@dataclass(frozen=True)
class SparseEmbeddingMatrix:
    """Non-negative sparse codes with row-token binding.

    ``sparsity`` is the achieved fraction of exact zeros.
    """

    tokens: tuple[str, ...]
    codes: sp.csr_matrix
    sparsity: float
    stats: FitStats | None = field(default=None, compare=False)
    token_to_row: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        codes = sp.csr_matrix(self.codes, dtype=np.float64)
        if codes.shape[0] != len(self.tokens):
            raise ValueError("one code row per token required")
        if codes.nnz and codes.data.min() < 0:
            raise ValueError("codes must be non-negative")
        object.__setattr__(self, "codes", codes)
        object.__setattr__(
            self, "token_to_row", {t: i for i, t in enumerate(self.tokens)}
        )

    @property
    def dim(self) -> int:
        return self.codes.shape[1]

    def __len__(self) -> int:
        return self.codes.shape[0]

    def __contains__(self, token: str) -> bool:
        return token in self.tokens

    def row(self, token: str) -> int:
        try:
            return self.token_to_row[token]
        except KeyError:
            raise KeyError(f"token {token!r} not in sparse matrix") from None

    def vector(self, token: str) -> np.ndarray:
        return np.asarray(self.codes[self.row(token)].todense()).ravel()

    def drop(self, tokens) -> "SparseEmbeddingMatrix":
        gone = set(tokens)
        keep = [i for i, t in enumerate(self.tokens) if t not in gone]
        return SparseEmbeddingMatrix(
            tuple(self.tokens[i] for i in keep), self.codes[keep],
            sparsity=self.sparsity,
        )


def _objective(E, S, D, l1, l2) -> float:
    resid = E - S @ D
    return float(
        np.sum(resid * resid) + l1 * np.sum(S) + l2 * np.sum(D * D)
    )


def _init_dictionary(E: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """K rows sampled from E with replacement, unit-normalized; rows too
    small to normalize are replaced by random unit vectors."""
    D = E[rng.integers(0, E.shape[0], size=K)].copy()
    norms = np.linalg.norm(D, axis=1)
    bad = norms < 1e-12
    if bad.any():
        D[bad] = rng.standard_normal((int(bad.sum()), E.shape[1]))
        norms = np.linalg.norm(D, axis=1)
    return D / norms[:, None]


def fit(emb: EmbeddingMatrix, n_components: int, l1: float = 0.5,
        l2: float = 1e-5, iters: int = 30, seed: int = 0,
        tol: float = 1e-4) -> tuple[Dictionary, SparseEmbeddingMatrix]:
    """Fit the dictionary and sparse non-negative codes for `emb`.

    Stops after `iters` outer iterations or when the relative objective
    change drops below `tol`.  The objective is checked to be
    non-increasing every iteration and finite, else the fit aborts with
    a diagnostic.  Code entries below 1e-9 are stored as exact zeros.
    """
    E = emb.vectors
    rows, d = E.shape
    if n_components < d:
        raise ValueError(
            f"undercomplete: n_components={n_components} must be >= dense dim {d}"
        )
    if l1 <= 0:
        raise ValueError("l1 must be positive")
    rng = np.random.default_rng(seed)
    D = _init_dictionary(E, n_components, rng)
    S = None
    ee = np.einsum("ij,ij->i", E, E)
    l2_const = float(l2 * n_components)  # ||D||^2 == K with unit atoms
    stats = FitStats()
    prev = np.inf
    for it in range(iters):
        G = D @ D.T
        C = E @ D.T
        S, obj_rows, _ = _kernels.nn_lasso(
            C, G, ee, l1, ENCODE_TOL, MAX_SWEEPS, S)

        # dictionary step: exact per-atom minimization on the unit sphere
        A = S.T @ S
        B = S.T @ E
        for k in range(n_components):
            if A[k, k] <= 0.0:
                continue  # dead atom, leave unchanged
            v = B[k] - A[k] @ D + A[k, k] * D[k]
            norm = np.linalg.norm(v)
            if norm > 1e-12:
                D[k] = v / norm

        obj = _objective(E, S, D, l1, 0.0) + l2_const
        if not np.isfinite(obj):
            raise FloatingPointError(
                f"non-finite objective at outer iteration {it}: {obj}"
            )
        if obj > prev + 1e-9 * max(1.0, abs(prev)):
            raise FloatingPointError(
                f"objective increased at outer iteration {it}: {prev} -> {obj}"
            )
        stats.objective.append(obj)
        if prev - obj < tol * max(1.0, abs(prev)):
            prev = obj
            break
        prev = obj

    S[S < ZERO_THRESHOLD] = 0.0
    stats.sparsity = float(np.mean(S == 0.0))
    enorm = float(np.linalg.norm(E, "fro"))
    stats.reconstruction_error = (
        float(np.linalg.norm(E - S @ D, "fro")) / enorm if enorm > 0 else 0.0
    )
    sparse = SparseEmbeddingMatrix(
        emb.tokens, sp.csr_matrix(S), sparsity=stats.sparsity, stats=stats
    )
    return Dictionary(D), sparse


def encode(row_vec: np.ndarray, dictionary: Dictionary, l1: float,
           tol: float = ENCODE_TOL) -> np.ndarray:
    """Non-negative sparse code of one dense vector against a fitted
    dictionary, solved to the given objective tolerance."""
    v = np.asarray(row_vec, dtype=np.float64).reshape(1, -1)
    if v.shape[1] != dictionary.dim:
        raise ValueError(
            f"vector dim {v.shape[1]} does not match dictionary dim {dictionary.dim}"
        )
    D = dictionary.atoms
    C = v @ D.T
    G = D @ D.T
    ee = np.einsum("ij,ij->i", v, v)
    S, _, _ = _kernels.nn_lasso(C, G, ee, l1, tol, MAX_SWEEPS, None)
    code = S[0]
    code[code < ZERO_THRESHOLD] = 0.0
    return code


def save_sparse(mat: SparseEmbeddingMatrix, path: str) -> None:
    """Text format: header `rows K`, then per row the token followed by
    `idx:val` pairs for the nonzeros in ascending index order."""
    csr = mat.codes
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(mat)} {mat.dim}\n")
        for i, tok in enumerate(mat.tokens):
            lo, hi = csr.indptr[i], csr.indptr[i + 1]
            pairs = " ".join(
                f"{csr.indices[j]}:{csr.data[j]:.9g}" for j in range(lo, hi)
            )
            fh.write(tok + (" " + pairs if pairs else "") + "\n")


def load_sparse(path: str) -> SparseEmbeddingMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected `rows K` header")
        rows, K = int(header[0]), int(header[1])
        tokens: list[str] = []
        mat = sp.lil_matrix((rows, K), dtype=np.float64)
        for i in range(rows):
            parts = fh.readline().split()
            if not parts:
                raise ValueError(f"{path}: missing row {i}")
            tokens.append(parts[0])
            for pair in parts[1:]:
                idx, val = pair.split(":")
                mat[i, int(idx)] = float(val)
    csr = mat.tocsr()
    zeros = 1.0 - (csr.nnz / (rows * K)) if rows * K else 1.0
    return SparseEmbeddingMatrix(tuple(tokens), csr, sparsity=zeros)
