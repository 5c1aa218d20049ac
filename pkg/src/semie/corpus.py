"""Corpus ingestion, tokenization, and vocabulary construction.

Everything downstream (infusion, embedding training, evaluation) shares
the `Corpus` and `Vocab` objects built here.  Both are immutable after
construction and safe for concurrent reads.
"""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass, field

__all__ = [
    "Document",
    "Corpus",
    "Vocab",
    "CorpusError",
    "tokenize",
    "ingest",
    "build_vocab",
    "save_vocab",
    "load_vocab",
]

ANCHOR_PREFIX = "A_"

# Alphanumeric runs; everything else (punctuation, hyphens, underscores)
# is a token boundary.
_WORD_RE = re.compile(r"[0-9a-z]+")


class CorpusError(ValueError):
    """Raised for unreadable, malformed, or empty corpus input."""


@dataclass(frozen=True)
class Document:
    """One labeled document: a token sequence plus its category label."""

    tokens: tuple[str, ...]
    label: str


@dataclass(frozen=True)
class Corpus:
    """Ordered labeled documents, plus the count of records dropped at ingestion."""

    documents: tuple[Document, ...]
    n_dropped: int = 0

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def labels(self) -> tuple[str, ...]:
        """Distinct labels in sorted order."""
        return tuple(sorted({d.label for d in self.documents}))

    def total_tokens(self) -> int:
        return sum(len(d.tokens) for d in self.documents)


def tokenize(raw: str) -> list[str]:
    """Lowercase and split on non-alphanumeric boundaries.

    Whitespace-delimited fragments starting with ``A_`` are anchor tokens
    and pass through verbatim, so a previously infused corpus re-ingests
    to the same token sequence.  Punctuation-only fragments vanish.
    """
    out: list[str] = []
    for frag in raw.split():
        if frag.startswith(ANCHOR_PREFIX) and len(frag) > len(ANCHOR_PREFIX):
            out.append(frag)
        else:
            out.extend(_WORD_RE.findall(frag.lower()))
    return out


def _records_jsonl(path: str):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            if not isinstance(rec, dict) or "text" not in rec or "label" not in rec:
                raise CorpusError(f"{path}:{lineno}: record needs 'text' and 'label' fields")
            yield lineno, str(rec["text"]), str(rec["label"])


def _records_csv(path: str):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"text", "label"} <= set(reader.fieldnames):
            raise CorpusError(f"{path}: CSV header must contain 'text' and 'label' columns")
        for lineno, rec in enumerate(reader, start=2):
            text, label = rec.get("text"), rec.get("label")
            if text is None or label is None:
                raise CorpusError(f"{path}:{lineno}: row is missing text or label")
            yield lineno, text, label


def ingest(path: str, format: str = "jsonl") -> Corpus:
    """Read a labeled corpus file into a `Corpus`.

    Records whose text tokenizes to nothing are dropped and counted in
    ``Corpus.n_dropped``.  Raises `CorpusError` on unreadable files,
    malformed records (with line numbers), unknown format tags, and
    files that yield zero usable documents.
    """
    readers = {"jsonl": _records_jsonl, "csv": _records_csv}
    if format not in readers:
        raise CorpusError(f"unknown corpus format {format!r} (expected jsonl or csv)")
    try:
        records = readers[format](path)
        docs: list[Document] = []
        dropped = 0
        for _, text, label in records:
            tokens = tokenize(text)
            if not tokens:
                dropped += 1
                continue
            docs.append(Document(tuple(tokens), label))
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from None
    if not docs:
        raise CorpusError(f"empty corpus: {path} has no records with usable text")
    return Corpus(tuple(docs), n_dropped=dropped)


@dataclass(frozen=True)
class Vocab:
    """Token/id bijection with corpus frequencies.

    Ids are assigned in descending frequency order, ties broken
    lexicographically, so the mapping is deterministic for a fixed
    corpus.  ``anchor_ids`` is empty until anchors are marked after
    infusion.
    """

    id_to_token: tuple[str, ...]
    counts: tuple[int, ...]
    anchor_ids: frozenset[int] = frozenset()
    token_to_id: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "token_to_id", {t: i for i, t in enumerate(self.id_to_token)}
        )

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id(self, token: str) -> int | None:
        return self.token_to_id.get(token)

    def token(self, idx: int) -> str:
        return self.id_to_token[idx]

    def count(self, token: str) -> int:
        idx = self.token_to_id.get(token)
        return 0 if idx is None else self.counts[idx]

    def encode(self, tokens) -> list[int]:
        """Map tokens to ids, skipping out-of-vocabulary tokens."""
        t2i = self.token_to_id
        return [t2i[t] for t in tokens if t in t2i]

    def mark_anchors(self, anchor_tokens) -> tuple["Vocab", list[str]]:
        """Return a copy with the given anchor tokens flagged.

        Anchors absent from the vocabulary (e.g. a class with no
        documents, or pruned by min_count) are returned as the second
        element so callers can warn.
        """
        present = frozenset(
            self.token_to_id[t] for t in anchor_tokens if t in self.token_to_id
        )
        missing = sorted(t for t in anchor_tokens if t not in self.token_to_id)
        return Vocab(self.id_to_token, self.counts, anchor_ids=present), missing


def build_vocab(corpus: Corpus, min_count: int = 5) -> Vocab:
    """Count tokens over the corpus and keep those with frequency >= min_count."""
    if len(corpus) == 0:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts = Counter()
    for doc in corpus:
        counts.update(doc.tokens)
    kept = [(tok, n) for tok, n in counts.items() if n >= min_count]
    if not kept:
        raise CorpusError(f"empty vocabulary: no token reaches min_count={min_count}")
    kept.sort(key=lambda item: (-item[1], item[0]))
    return Vocab(tuple(t for t, _ in kept), tuple(n for _, n in kept))


def save_vocab(vocab: Vocab, path: str) -> None:
    """Write one `token<TAB>id<TAB>count` line per token."""
    with open(path, "w", encoding="utf-8") as fh:
        for idx, tok in enumerate(vocab.id_to_token):
            fh.write(f"{tok}\t{idx}\t{vocab.counts[idx]}\n")


def load_vocab(path: str) -> Vocab:
    tokens: list[str] = []
    counts: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise CorpusError(f"{path}:{lineno}: expected token<TAB>id<TAB>count")
            tok, idx, cnt = parts
            if int(idx) != len(tokens):
                raise CorpusError(f"{path}:{lineno}: ids must be consecutive from 0")
            tokens.append(tok)
            counts.append(int(cnt))
    if not tokens:
        raise CorpusError(f"{path}: empty vocabulary file")
    return Vocab(tuple(tokens), tuple(counts))
