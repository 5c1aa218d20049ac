"""Embedding evaluation: downstream classification, word intrusion
tests, dimension labeling, and discriminative triple extraction.

All operations are read-only over the embedding matrices.  The dense
`EmbeddingMatrix` and the sparse `SparseEmbeddingMatrix` are accepted
interchangeably where it makes sense; for sparse matrices, rankings and
percentiles are taken over the nonzero entries of a dimension (zeros
carry no signal there), for dense matrices over all entries.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .corpus import ANCHOR_PREFIX, Corpus, Document
from .embeddings import EmbeddingMatrix
from .infusion import AnchorSet, concept_name
from .snn import SparseEmbeddingMatrix

__all__ = [
    "IntrusionTest",
    "SkippedDimension",
    "Triple",
    "TripleReport",
    "DimensionLabel",
    "ClassificationReport",
    "doc_vector",
    "train_eval_classifier",
    "generate_intrusion_tests",
    "auto_judge",
    "judge_tests",
    "label_dimensions",
    "extract_triples",
    "write_intrusion_tests",
    "load_intrusion_tests",
    "write_triples_csv",
    "write_labels",
]

DEFAULT_EPS = 1e-6


def _tokens_of(mat) -> tuple[str, ...]:
    return mat.tokens


def _column(mat, j: int) -> np.ndarray:
    if isinstance(mat, SparseEmbeddingMatrix):
        return np.asarray(mat.codes[:, j].todense()).ravel()
    return mat.vectors[:, j]


def _n_dims(mat) -> int:
    return mat.dim


def _nonzero_mode(mat, mode: str) -> bool:
    if mode == "auto":
        return isinstance(mat, SparseEmbeddingMatrix)
    if mode in ("nonzero", "all"):
        return mode == "nonzero"
    raise ValueError(f"unknown ranking mode {mode!r}")


# ---------------------------------------------------------------------------
# downstream classification


def doc_vector(doc: Document, mat) -> np.ndarray:
    """Unweighted mean of the in-vocabulary token vectors (over token
    occurrences, not types).  Raises ValueError when no token is in
    vocabulary; callers flag and exclude such documents."""
    lookup = mat.token_to_row
    rows = [lookup[t] for t in doc.tokens if t in lookup]
    if not rows:
        raise ValueError("document has no in-vocabulary tokens")
    if isinstance(mat, SparseEmbeddingMatrix):
        return np.asarray(mat.codes[rows].mean(axis=0)).ravel()
    return mat.vectors[rows].mean(axis=0)


@dataclass
class ClassificationReport:
    accuracy: float
    per_class_accuracy: dict[str, float]
    train_size: int
    test_size: int
    skipped_docs: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def train_eval_classifier(mat, corpus: Corpus, per_class_train: int,
                          per_class_test: int, seed: int,
                          epochs: int = 50, l2: float = 1e-4,
                          lr: float = 0.1) -> ClassificationReport:
    """Linear max-margin text classification over averaged embeddings.

    Balanced per-class train/test samples; if a class has fewer
    documents than train+test, all per-class sizes scale down
    proportionally (reported in the result).  The classifier is
    one-vs-rest hinge loss trained by stochastic subgradient descent.
    The matrix must not contain anchor rows (drop them first).
    """
    labels = corpus.labels
    if len(labels) < 2:
        raise ValueError("classification needs at least 2 classes")
    label_idx = {lbl: i for i, lbl in enumerate(labels)}

    by_class: dict[str, list[np.ndarray]] = {lbl: [] for lbl in labels}
    skipped = 0
    for doc in corpus:
        try:
            vec = doc_vector(doc, mat)
        except ValueError:
            skipped += 1
            continue
        by_class[doc.label].append(vec)

    smallest = min(len(v) for v in by_class.values())
    want = per_class_train + per_class_test
    n_train, n_test = per_class_train, per_class_test
    if smallest < want:
        scale = smallest / want
        n_train = max(1, int(per_class_train * scale))
        n_test = max(1, min(int(per_class_test * scale), smallest - n_train))
    if n_train < 1 or n_test < 1:
        raise ValueError("not enough documents per class to train and test")

    rng = np.random.default_rng(seed)
    train_x, train_y, test_x, test_y = [], [], [], []
    for lbl in labels:
        pool = by_class[lbl]
        order = rng.permutation(len(pool))
        for i in order[:n_train]:
            train_x.append(pool[i])
            train_y.append(label_idx[lbl])
        for i in order[n_train:n_train + n_test]:
            test_x.append(pool[i])
            test_y.append(label_idx[lbl])

    X = np.asarray(train_x)
    y = np.asarray(train_y)
    Xt = np.asarray(test_x)
    yt = np.asarray(test_y)
    n, dim = X.shape
    M = len(labels)
    targets = -np.ones((n, M))
    targets[np.arange(n), y] = 1.0

    W = np.zeros((M, dim))
    b = np.zeros(M)
    for epoch in range(epochs):
        step = lr / (1.0 + 9.0 * epoch / max(epochs - 1, 1))
        for i in rng.permutation(n):
            scores = W @ X[i] + b
            viol = targets[i] * scores < 1.0
            W *= 1.0 - step * l2
            if viol.any():
                W[viol] += step * targets[i, viol][:, None] * X[i][None, :]
                b[viol] += step * targets[i, viol]

    pred = np.argmax(Xt @ W.T + b, axis=1)
    per_class = {
        lbl: float(np.mean(pred[yt == label_idx[lbl]] == label_idx[lbl]))
        for lbl in labels
    }
    return ClassificationReport(
        accuracy=float(np.mean(pred == yt)),
        per_class_accuracy=per_class,
        train_size=int(n),
        test_size=int(len(yt)),
        skipped_docs=skipped,
    )


# ---------------------------------------------------------------------------
# word intrusion tests


@dataclass(frozen=True)
class IntrusionTest:
    """One five-word quiz: the four top-ranked words of a dimension plus
    an intruder from its bottom half that tops some other dimension."""

    dim: int
    top_words: tuple[str, str, str, str]
    intruder: str
    options: tuple[str, str, str, str, str]

    def to_dict(self, blind: bool = False) -> dict:
        rec = {"dim": self.dim, "options": list(self.options)}
        if not blind:
            rec["answer"] = self.intruder
        return rec


@dataclass(frozen=True)
class SkippedDimension:
    dim: int
    reason: str


def _ranked_desc(values: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Row indices of `support` ordered by value descending, ties by row
    id ascending."""
    vals = values[support]
    order = np.argsort(-vals, kind="stable")
    return support[order]


def generate_intrusion_tests(mat, n_dims: int, seed: int,
                             mode: str = "auto"):
    """Build intrusion tests for `n_dims` dimensions sampled without
    replacement.

    Per sampled dimension: the 4 top-ranked words plus one intruder from
    the bottom half of the ranked list that also reaches the top 10th
    percentile of at least one other dimension.  Dimensions without an
    eligible intruder (or degenerate ones) are skipped and reported.
    Returns (tests, skipped).  Anchor rows must be removed beforehand.
    """
    K = _n_dims(mat)
    if K < 2:
        raise ValueError("intrusion tests need at least 2 dimensions")
    nonzero = _nonzero_mode(mat, mode)
    rng = np.random.default_rng(seed)
    n_dims = min(n_dims, K)
    sampled = rng.choice(K, size=n_dims, replace=False)

    columns = [_column(mat, j) for j in range(K)]
    supports = [
        np.flatnonzero(col > 0) if nonzero else np.arange(len(col))
        for col in columns
    ]
    thresholds = np.full(K, np.inf)
    for j in range(K):
        if len(supports[j]):
            thresholds[j] = np.percentile(columns[j][supports[j]], 90)

    tokens = _tokens_of(mat)
    tests: list[IntrusionTest] = []
    skipped: list[SkippedDimension] = []
    for j in sampled:
        col = columns[j]
        support = supports[j]
        if len(support) < 8:
            skipped.append(SkippedDimension(int(j), "fewer than 8 ranked words"))
            continue
        ranked = _ranked_desc(col, support)
        if col[ranked[0]] == col[ranked[-1]]:
            skipped.append(SkippedDimension(int(j), "all ranked values equal"))
            continue
        top4 = ranked[:4]
        bottom = ranked[-(len(ranked) // 2):]
        eligible = []
        for w in bottom:
            for j2 in range(K):
                if j2 != j and columns[j2][w] >= thresholds[j2]:
                    eligible.append(w)
                    break
        if not eligible:
            skipped.append(SkippedDimension(int(j), "no eligible intruder"))
            continue
        intruder = eligible[rng.integers(0, len(eligible))]
        options = [tokens[i] for i in top4] + [tokens[intruder]]
        order = rng.permutation(5)
        tests.append(IntrusionTest(
            dim=int(j),
            top_words=tuple(tokens[i] for i in top4),
            intruder=tokens[intruder],
            options=tuple(options[i] for i in order),
        ))
    if not tests and not skipped:
        raise ValueError("no dimensions sampled")
    return tests, skipped


def auto_judge(test: IntrusionTest, ref: EmbeddingMatrix):
    """Automated intruder pick: the option with the lowest mean cosine
    similarity to the other four in the reference dense space.  Ties
    break to the lexicographically smallest option.  Returns
    (predicted, correct)."""
    vecs = []
    for w in test.options:
        if w not in ref:
            raise KeyError(f"option {w!r} missing from reference embeddings")
        v = ref.vector(w)
        norm = np.linalg.norm(v)
        vecs.append(v / norm if norm > 0 else v)
    vecs = np.asarray(vecs)
    sims = vecs @ vecs.T
    mean_sim = (sims.sum(axis=1) - 1.0) / 4.0
    best = min(range(5), key=lambda i: (mean_sim[i], test.options[i]))
    predicted = test.options[best]
    return predicted, predicted == test.intruder


def judge_tests(tests, ref: EmbeddingMatrix):
    """Run `auto_judge` over all tests.  Returns (precision, results)."""
    results = [auto_judge(t, ref) for t in tests]
    correct = sum(1 for _, ok in results if ok)
    return correct / max(len(tests), 1), results


# ---------------------------------------------------------------------------
# dimension labels


@dataclass(frozen=True)
class DimensionLabel:
    """Label of one dimension: the top-ranked active anchor (None when
    every anchor is inactive) and the top non-anchor words."""

    dim: int
    anchor: str | None
    top_words: tuple[str, ...]


def label_dimensions(mat, anchors, top_k: int = 5,
                     eps: float = DEFAULT_EPS) -> list[DimensionLabel]:
    """Label every dimension with its highest-valued anchor.

    `anchors` is an `AnchorSet` or an iterable of anchor tokens; all
    must be rows of `mat`.  Per dimension, the label is the anchor with
    the largest value when any anchor exceeds `eps`, else None
    ("unlabeled").  Up to `top_k` non-anchor words with positive values
    are returned, ranked descending.
    """
    anchor_tokens = anchors.tokens if isinstance(anchors, AnchorSet) else tuple(anchors)
    tokens = _tokens_of(mat)
    anchor_rows = np.asarray([mat.row(t) for t in anchor_tokens])
    word_rows = np.setdiff1d(np.arange(len(tokens)), anchor_rows)
    out = []
    for j in range(_n_dims(mat)):
        col = _column(mat, j)
        avals = col[anchor_rows]
        best = int(np.argmax(avals))
        label = anchor_tokens[best] if avals[best] > eps else None
        support = word_rows[col[word_rows] > 0]
        ranked = _ranked_desc(col, support)[:top_k]
        out.append(DimensionLabel(j, label, tuple(tokens[i] for i in ranked)))
    return out


def write_labels(labels, path: str) -> None:
    """TSV: dim, label (or `unlabeled`), comma-joined top words."""
    with open(path, "w", encoding="utf-8") as fh:
        for lab in labels:
            name = lab.anchor if lab.anchor is not None else "unlabeled"
            fh.write(f"{lab.dim}\t{name}\t{','.join(lab.top_words)}\n")


# ---------------------------------------------------------------------------
# discriminative triples


@dataclass(frozen=True)
class Triple:
    concept1: str
    concept2: str
    feature: str
    dim: int
    value: float


@dataclass
class TripleReport:
    """Discriminative and non-discriminative (concept, concept, feature)
    triples for one anchor pair, plus the dimension partition counts."""

    anchor1: str
    anchor2: str
    discriminative: list[Triple] = field(default_factory=list)
    non_discriminative: list[Triple] = field(default_factory=list)
    dims_one_active: int = 0
    dims_both_active: int = 0
    dims_none_active: int = 0


def extract_triples(mat, anchor1: str, anchor2: str, eps: float = DEFAULT_EPS,
                    top_k: int = 5) -> TripleReport:
    """Partition dimensions by which of the two anchors is active
    (value > eps) and harvest features.

    Dimensions where exactly one anchor is active contribute their top
    non-anchor words as discriminative features of the active concept;
    dimensions where both are active contribute non-discriminative
    features; dimensions where neither is active are ignored.  Duplicate
    features keep the occurrence with the highest value.
    """
    if anchor1 == anchor2:
        raise ValueError("anchors must differ")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    r1, r2 = mat.row(anchor1), mat.row(anchor2)
    c1, c2 = concept_name(anchor1), concept_name(anchor2)
    tokens = _tokens_of(mat)
    # every anchor row is excluded from features, not just the two compared
    word_rows = np.asarray([i for i, t in enumerate(tokens)
                            if not t.startswith(ANCHOR_PREFIX)])

    report = TripleReport(anchor1, anchor2)
    best: dict[tuple, Triple] = {}
    for j in range(_n_dims(mat)):
        col = _column(mat, j)
        a1, a2 = col[r1] > eps, col[r2] > eps
        if not a1 and not a2:
            report.dims_none_active += 1
            continue
        support = word_rows[col[word_rows] > eps]
        ranked = _ranked_desc(col, support)[:top_k]
        if a1 and a2:
            report.dims_both_active += 1
            kind_c1, kind_c2, kind = c1, c2, "nondisc"
        else:
            report.dims_one_active += 1
            kind_c1, kind_c2 = (c1, c2) if a1 else (c2, c1)
            kind = "disc"
        for i in ranked:
            key = (kind, kind_c1, kind_c2, tokens[i])
            t = Triple(kind_c1, kind_c2, tokens[i], j, float(col[i]))
            if key not in best or t.value > best[key].value:
                best[key] = t

    for (kind, _, _, _), t in best.items():
        if kind == "disc":
            report.discriminative.append(t)
        else:
            report.non_discriminative.append(t)
    report.discriminative.sort(key=lambda t: -t.value)
    report.non_discriminative.sort(key=lambda t: -t.value)
    return report


def write_triples_csv(reports, path: str) -> None:
    """CSV columns: concept1, concept2, feature, kind, dimension, value.
    Accepts one `TripleReport` or an iterable of them."""
    if isinstance(reports, TripleReport):
        reports = [reports]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["concept1", "concept2", "feature", "kind",
                         "dimension", "value"])
        for report in reports:
            for kind, triples in (("disc", report.discriminative),
                                  ("nondisc", report.non_discriminative)):
                for t in triples:
                    writer.writerow([t.concept1, t.concept2, t.feature, kind,
                                     t.dim, f"{t.value:.9g}"])


# ---------------------------------------------------------------------------
# intrusion test files


def write_intrusion_tests(tests, path: str, blind: bool = False) -> None:
    """JSONL, one test per line: {dim, options, answer}; `blind` drops
    the answer key for human annotation."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in tests:
            fh.write(json.dumps(t.to_dict(blind=blind), sort_keys=True) + "\n")


def load_intrusion_tests(path: str) -> list[IntrusionTest]:
    tests = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "answer" not in rec:
                raise ValueError(f"{path}: blind test file has no answer keys")
            options = tuple(rec["options"])
            answer = rec["answer"]
            top = tuple(w for w in options if w != answer)
            tests.append(IntrusionTest(rec["dim"], top, answer, options))
    return tests
