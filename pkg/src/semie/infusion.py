"""Anchor infusion: insert per-class marker tokens into documents.

Each document of class ``c`` receives ``ceil(log2(len)/2)`` copies of the
class anchor token at random, non-adjacent positions.  Anchors tie class
semantics into co-occurrence statistics when embeddings are trained on
the infused corpus.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import ANCHOR_PREFIX, Corpus, Document

__all__ = [
    "AnchorSet",
    "AnchorCollisionError",
    "anchor_token",
    "concept_name",
    "infusion_frequency",
    "infuse_document",
    "infuse_corpus",
    "strip_anchors",
]


class AnchorCollisionError(ValueError):
    """An anchor token already occurs as a regular corpus token."""


def anchor_token(label: str) -> str:
    """Map a class label to its anchor token: spaces become underscores,
    then the reserved ``A_`` prefix is attached ("Seat Belts" -> "A_Seat_Belts")."""
    return ANCHOR_PREFIX + label.replace(" ", "_")


def concept_name(anchor: str) -> str:
    """Inverse of `anchor_token`: strip the prefix, underscores become spaces."""
    if not anchor.startswith(ANCHOR_PREFIX):
        raise ValueError(f"{anchor!r} is not an anchor token")
    return anchor[len(ANCHOR_PREFIX):].replace("_", " ")


@dataclass(frozen=True)
class AnchorSet:
    """Bijective class-label -> anchor-token map, one anchor per class."""

    by_label: dict[str, str]

    @classmethod
    def for_corpus(cls, corpus: Corpus) -> "AnchorSet":
        """Derive anchors from the corpus labels, rejecting collisions with
        existing corpus tokens (the ``A_`` prefix is reserved)."""
        mapping = {label: anchor_token(label) for label in corpus.labels}
        anchors = set(mapping.values())
        if len(anchors) != len(mapping):
            raise AnchorCollisionError("two class labels map to the same anchor token")
        for doc in corpus:
            hit = anchors.intersection(doc.tokens)
            if hit:
                raise AnchorCollisionError(
                    f"anchor token(s) {sorted(hit)} already occur in the corpus"
                )
        return cls(mapping)

    def __len__(self) -> int:
        return len(self.by_label)

    def anchor(self, label: str) -> str:
        return self.by_label[label]

    @property
    def tokens(self) -> tuple[str, ...]:
        """Anchor tokens in sorted-label order."""
        return tuple(self.by_label[lbl] for lbl in sorted(self.by_label))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for label in sorted(self.by_label):
                fh.write(f"{label}\t{self.by_label[label]}\n")

    @classmethod
    def load(cls, path: str) -> "AnchorSet":
        mapping: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                label, anchor = line.rstrip("\n").split("\t")
                mapping[label] = anchor
        if not mapping:
            raise ValueError(f"{path}: empty anchor file")
        return cls(mapping)


def infusion_frequency(doc_len: int) -> int:
    """Number of anchor copies for a document of ``doc_len`` tokens:
    ceil(log2(doc_len) / 2), at least 1."""
    if doc_len < 1:
        raise ValueError(f"doc_len must be >= 1, got {doc_len}")
    return max(1, math.ceil(math.log2(doc_len) / 2.0))


def infuse_document(doc: Document, anchor: str, rng: np.random.Generator) -> Document:
    """Insert the anchor at random non-adjacent positions.

    Insertion points are sampled without replacement from the len+1 gaps
    around the original tokens, at most one anchor per gap, which
    guarantees no two anchor copies end up adjacent and preserves the
    original token order.
    """
    l = len(doc.tokens)
    k = min(infusion_frequency(l), l + 1)
    gaps = np.sort(rng.choice(l + 1, size=k, replace=False))
    out: list[str] = []
    gi = 0
    for pos in range(l + 1):
        while gi < k and gaps[gi] == pos:
            out.append(anchor)
            gi += 1
        if pos < l:
            out.append(doc.tokens[pos])
    return Document(tuple(out), doc.label)


def infuse_corpus(corpus: Corpus, anchors: AnchorSet, seed: int) -> Corpus:
    """Infuse every document with its class anchor.

    Documents get independent RNG streams derived from (seed, doc index),
    so results are reproducible and order-independent under parallel
    infusion.  Classes in the anchor set with no documents are warned
    about (their anchor never enters the corpus).
    """
    missing = [d.label for d in corpus if d.label not in anchors.by_label]
    if missing:
        raise KeyError(f"no anchor for label(s) {sorted(set(missing))}")
    seen = {d.label for d in corpus}
    empty = sorted(set(anchors.by_label) - seen)
    if empty:
        warnings.warn(f"classes with no documents, anchor not infused: {empty}")
    docs = tuple(
        infuse_document(doc, anchors.anchor(doc.label), np.random.default_rng((seed, i)))
        for i, doc in enumerate(corpus)
    )
    return Corpus(docs, n_dropped=corpus.n_dropped)


def strip_anchors(doc: Document) -> Document:
    """Remove anchor tokens, recovering the pre-infusion sequence."""
    return Document(
        tuple(t for t in doc.tokens if not t.startswith(ANCHOR_PREFIX)), doc.label
    )
