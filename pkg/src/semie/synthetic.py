"""Synthetic labeled corpora with known structure.

`planted_corpus` plants class-exclusive and shared vocabulary so
interpretability checks have ground truth; `topic_model_corpus` draws
documents from disjoint uniform topics, which makes the PPMI signal
matrix rank-r up to sampling noise (entries are log(r) inside topic
blocks, zero across).
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, Document

__all__ = ["planted_corpus", "planted_vocabulary", "planted_membership",
           "topic_model_corpus"]


def planted_vocabulary(n_classes: int = 5, exclusive_per_class: int = 150,
                       pair_words: int = 60, shared_words: int = 120):
    """Token pools: one exclusive list per class, one list per planted
    class pair (disjoint consecutive pairs), and the globally shared
    list."""
    exclusive = [
        [f"cls{c}word{i}" for i in range(exclusive_per_class)]
        for c in range(n_classes)
    ]
    pairs = [(c, c + 1) for c in range(0, n_classes - 1, 2)]
    pair_shared = {
        (i, j): [f"pair{i}x{j}word{w}" for w in range(pair_words)]
        for i, j in pairs
    }
    shared = [f"shared{i}" for i in range(shared_words)]
    return exclusive, pair_shared, shared


def planted_corpus(n_classes: int = 5, docs_per_class: int = 400,
                   exclusive_per_class: int = 150, pair_words: int = 60,
                   shared_words: int = 120,
                   doc_len: tuple[int, int] = (30, 80),
                   exclusive_frac: float = 0.55, pair_frac: float = 0.2,
                   segment_len: tuple[int, int] = (4, 8),
                   seed: int = 0) -> Corpus:
    """Labeled corpus with class-exclusive, pair-shared, and globally
    shared vocabulary, written in topical segments.

    Documents are built segment by segment; each segment draws all its
    tokens from one pool, chosen per segment: the class's exclusive pool
    with probability `exclusive_frac`, the pool shared with the class's
    pair partner with probability `pair_frac` (like product names common
    to two complaint categories; classes are paired disjointly, a
    trailing odd class has no partner), else the global pool.  The
    segment structure gives each pool its own co-occurrence block, so
    the planted concepts stay separable in the signal spectrum.
    """
    rng = np.random.default_rng(seed)
    exclusive, pair_shared, shared = planted_vocabulary(
        n_classes, exclusive_per_class, pair_words, shared_words)
    partner_pool = {}
    for (i, j), pool in pair_shared.items():
        partner_pool[i] = pool
        partner_pool[j] = pool
    docs = []
    for c in range(n_classes):
        label = f"topic {c}"
        p_frac = pair_frac if c in partner_pool else 0.0
        for _ in range(docs_per_class):
            target = int(rng.integers(doc_len[0], doc_len[1] + 1))
            toks: list[str] = []
            while len(toks) < target:
                roll = rng.random()
                if roll < exclusive_frac:
                    src = exclusive[c]
                elif roll < exclusive_frac + p_frac:
                    src = partner_pool[c]
                else:
                    src = shared
                seg = int(rng.integers(segment_len[0], segment_len[1] + 1))
                for _ in range(seg):
                    toks.append(src[rng.integers(0, len(src))])
            docs.append(Document(tuple(toks[:target]), label))
    return Corpus(tuple(docs))


def planted_membership(word: str, class_index: int) -> bool:
    """Ground truth of `planted_corpus`: does the word belong to the
    class's planted vocabulary?  Exclusive words belong to one class,
    pair words to both classes of their pair, shared words to all."""
    if word.startswith("cls"):
        return word[3] == str(class_index)
    if word.startswith("pair"):
        return str(class_index) in (word[4], word[6])
    return word.startswith("shared")


def topic_model_corpus(n_topics: int, words_per_topic: int = 40,
                       n_docs: int = 1000, doc_len: int = 100,
                       seed: int = 0) -> Corpus:
    """Single-topic documents over disjoint uniform topic vocabularies."""
    rng = np.random.default_rng(seed)
    docs = []
    for _ in range(n_docs):
        t = int(rng.integers(0, n_topics))
        ids = rng.integers(0, words_per_topic, size=doc_len)
        docs.append(Document(
            tuple(f"t{t}w{i}" for i in ids), f"topic {t}"
        ))
    return Corpus(tuple(docs))
