"""Tests for the skip-gram trainer, its kernels, and co-occurrence."""

import numpy as np
import pytest

from semie._kernels import _lasso_py, _sgns_py
from semie.corpus import Corpus, Document, Vocab, build_vocab
from semie.embeddings import load_embeddings, save_embeddings
from semie.sgns import (TrainConfig, cooccurrence, pair_gradients,
                        pair_objective, train)
from semie.synthetic import planted_corpus

try:
    from semie._kernels import _lasso_cy, _sgns_cy
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def _two_cluster_corpus(seed=0):
    rng = np.random.default_rng(seed)
    docs = []
    for c, prefix in enumerate(("alpha", "beta")):
        vocab = [f"{prefix}{i}" for i in range(15)]
        for _ in range(20):
            toks = [vocab[rng.integers(0, 15)] for _ in range(30)]
            docs.append(Document(tuple(toks), prefix))
    return Corpus(tuple(docs))


class TestGradients:
    def test_analytic_matches_central_differences(self):
        # 5-token vocabulary: one center, one context, three negatives
        rng = np.random.default_rng(3)
        center = rng.standard_normal(8)
        context = rng.standard_normal(8)
        negs = rng.standard_normal((3, 8))
        g_c, g_ctx, g_neg = pair_gradients(center, context, negs)
        h = 1e-6

        def fd(vec, update):
            grad = np.zeros_like(vec)
            for i in range(vec.size):
                for sign in (1, -1):
                    probe = vec.copy()
                    probe.flat[i] += sign * h
                    grad.flat[i] += sign * update(probe)
            return grad / (2 * h)

        fd_c = fd(center, lambda v: pair_objective(v, context, negs))
        fd_ctx = fd(context, lambda v: pair_objective(center, v, negs))
        for analytic, numeric in ((g_c, fd_c), (g_ctx, fd_ctx)):
            rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8)
            assert rel.max() < 1e-4
        for n in range(3):
            def obj_neg(v, n=n):
                probe = negs.copy()
                probe[n] = v
                return pair_objective(center, context, probe)
            fd_n = fd(negs[n], obj_neg)
            rel = np.abs(g_neg[n] - fd_n) / np.maximum(np.abs(fd_n), 1e-8)
            assert rel.max() < 1e-4

    def test_kernel_update_is_gradient_step(self):
        # one document "a b", window 1, negative table forcing token c:
        # the kernel's update must equal -alpha times the pair gradients
        syn0 = np.array([[0.3, -0.2], [0.1, 0.4], [-0.5, 0.2]])
        syn1 = np.array([[0.05, 0.1], [-0.3, 0.2], [0.4, -0.1]])
        tokens = np.array([0, 1], dtype=np.int32)
        offsets = np.array([0, 2], dtype=np.int64)
        keep = np.ones(3)
        table = np.array([2], dtype=np.int32)  # all negatives are token 2
        alpha = 0.05

        expect0, expect1 = syn0.copy(), syn1.copy()
        # the kernel trains pairs (0,1) then (1,0); one negative each
        for w, c in ((0, 1), (1, 0)):
            g_c, g_ctx, g_neg = pair_gradients(
                expect0[w], expect1[c], expect1[[2]])
            expect1[c] -= alpha * g_ctx
            expect1[2] -= alpha * g_neg[0]
            expect0[w] -= alpha * g_c

        from semie import _kernels
        got0, got1 = syn0.copy(), syn1.copy()
        _kernels.train_epoch(tokens, offsets, got0, got1, keep, table,
                             1, 1, alpha, 10**9, 0, 7)
        # total_planned huge so alpha stays at alpha_start
        np.testing.assert_allclose(got0, expect0, atol=1e-12)
        np.testing.assert_allclose(got1, expect1, atol=1e-12)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels not built")
class TestKernelParity:
    """The compiled and pure-Python kernels must agree bit-for-bit."""

    def test_sgns_parity_over_epochs(self):
        rng = np.random.default_rng(0)
        V, d = 25, 6
        docs = [rng.integers(0, V, size=rng.integers(4, 20)).astype(np.int32)
                for _ in range(30)]
        tokens = np.concatenate(docs).astype(np.int32)
        offsets = np.zeros(len(docs) + 1, dtype=np.int64)
        np.cumsum([len(x) for x in docs], out=offsets[1:])
        syn0a = (rng.random((V, d)) - 0.5) / d
        syn1a = np.zeros((V, d))
        syn0b, syn1b = syn0a.copy(), syn1a.copy()
        keep = np.minimum(rng.random(V) + 0.4, 1.0)
        table = rng.integers(0, V, size=512).astype(np.int32)

        pa = pb = 0
        for epoch in range(3):
            ra = _sgns_py.train_epoch(tokens, offsets, syn0a, syn1a, keep,
                                      table, 4, 3, 0.03, 3 * len(tokens), pa,
                                      1000 + epoch)
            rb = _sgns_cy.train_epoch(tokens, offsets, syn0b, syn1b, keep,
                                      table, 4, 3, 0.03, 3 * len(tokens), pb,
                                      1000 + epoch)
            assert ra == rb
            pa, pb = ra[0], rb[0]
        assert np.array_equal(syn0a, syn0b)
        assert np.array_equal(syn1a, syn1b)

    def test_lasso_parity_cold_and_warm(self):
        rng = np.random.default_rng(1)
        R, K, d = 40, 30, 6
        E = rng.standard_normal((R, d))
        D = rng.standard_normal((K, d))
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        G, C = D @ D.T, E @ D.T
        ee = np.einsum("ij,ij->i", E, E)
        Sa, oa, wa = _lasso_py.nn_lasso(C, G, ee, 0.5, 1e-6, 300, None)
        Sb, ob, wb = _lasso_cy.nn_lasso(C, G, ee, 0.5, 1e-6, 300, None)
        assert np.array_equal(Sa, Sb) and np.array_equal(oa, ob)
        assert np.array_equal(wa, wb)
        Sa2, oa2, _ = _lasso_py.nn_lasso(C, G, ee, 0.3, 1e-8, 300, Sa)
        Sb2, ob2, _ = _lasso_cy.nn_lasso(C, G, ee, 0.3, 1e-8, 300, Sb)
        assert np.array_equal(Sa2, Sb2) and np.array_equal(oa2, ob2)


class TestTrain:
    def test_cluster_separation(self):
        corpus = _two_cluster_corpus()
        vocab = build_vocab(corpus, min_count=1)
        emb = train(corpus, vocab, TrainConfig(dim=8, epochs=5, seed=4))
        vec = emb.vectors / np.linalg.norm(emb.vectors, axis=1, keepdims=True)
        alpha = [emb.row(t) for t in emb.tokens if t.startswith("alpha")]
        beta = [emb.row(t) for t in emb.tokens if t.startswith("beta")]
        sims = vec @ vec.T
        intra = (sims[np.ix_(alpha, alpha)].mean()
                 + sims[np.ix_(beta, beta)].mean()) / 2
        inter = sims[np.ix_(alpha, beta)].mean()
        assert intra > inter

    def test_heldout_loss_decreases(self):
        corpus = planted_corpus(n_classes=3, docs_per_class=100,
                                exclusive_per_class=30, pair_words=10,
                                shared_words=20, seed=6)
        vocab = build_vocab(corpus, min_count=1)
        emb, stats = train(corpus, vocab, TrainConfig(dim=8, epochs=5, seed=2),
                           return_stats=True)
        assert stats.heldout_docs > 0
        assert stats.heldout_loss[0] > stats.heldout_loss[-1]

    def test_norms_bounded(self):
        corpus = _two_cluster_corpus(seed=9)
        vocab = build_vocab(corpus, min_count=1)
        emb = train(corpus, vocab, TrainConfig(dim=8, epochs=10, seed=1))
        assert np.linalg.norm(emb.vectors, axis=1).max() < 100

    def test_dim_must_be_below_vocab(self):
        corpus = _two_cluster_corpus()
        vocab = build_vocab(corpus, min_count=1)
        with pytest.raises(ValueError, match="smaller than vocabulary"):
            train(corpus, vocab, TrainConfig(dim=len(vocab), seed=0))

    def test_single_token_corpus_rejected_by_dim_guard(self):
        corpus = Corpus((Document(("only",), "x"),))
        vocab = build_vocab(corpus, min_count=1)
        with pytest.raises(ValueError):
            train(corpus, vocab, TrainConfig(dim=1, seed=0))

    def test_deterministic_single_worker(self):
        corpus = _two_cluster_corpus(seed=5)
        vocab = build_vocab(corpus, min_count=1)
        cfg = TrainConfig(dim=6, epochs=2, seed=13)
        a = train(corpus, vocab, cfg)
        b = train(corpus, vocab, cfg)
        assert np.array_equal(a.vectors, b.vectors)

    def test_anchor_neighbors_on_planted_corpus(self):
        from semie.infusion import AnchorSet, infuse_corpus
        corpus = planted_corpus(n_classes=3, docs_per_class=150,
                                exclusive_per_class=30, pair_words=10,
                                shared_words=20, seed=8)
        anchors = AnchorSet.for_corpus(corpus)
        infused = infuse_corpus(corpus, anchors, seed=1)
        vocab, _ = build_vocab(infused, min_count=1).mark_anchors(anchors.tokens)
        emb = train(infused, vocab, TrainConfig(dim=8, epochs=5, seed=3))
        for c in range(3):
            names = [w for w, _ in emb.nearest(f"A_topic_{c}", 10)]
            own = sum(1 for w in names if w.startswith(f"cls{c}"))
            assert own >= 6, f"anchor {c} neighbors not class-dominated: {names}"


class TestCooccurrence:
    def _vocab(self, tokens):
        corpus = Corpus((Document(tuple(tokens), "x"),))
        return corpus, build_vocab(corpus, min_count=1)

    def test_single_pair(self):
        corpus, vocab = self._vocab(["a", "b"])
        m = cooccurrence(corpus, vocab, window=1).toarray()
        i, j = vocab.id("a"), vocab.id("b")
        assert m[i, j] == 1.0 and m[j, i] == 1.0
        assert m[i, i] == 0.0

    def test_distance_weighting(self):
        corpus, vocab = self._vocab(["a", "b", "c"])
        m = cooccurrence(corpus, vocab, window=2).toarray()
        assert m[vocab.id("a"), vocab.id("c")] == pytest.approx(0.5)

    def test_symmetric(self):
        corpus = planted_corpus(n_classes=3, docs_per_class=30, seed=4)
        vocab = build_vocab(corpus, min_count=1)
        m = cooccurrence(corpus, vocab, window=5)
        assert (m != m.T).nnz == 0

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(12)
        tokens = [f"w{rng.integers(0, 12)}" for _ in range(500)]
        corpus, vocab = self._vocab(tokens)
        window = 4
        got = cooccurrence(corpus, vocab, window).toarray()
        ids = vocab.encode(tokens)
        expected = np.zeros_like(got)
        for p in range(len(ids)):
            for q in range(len(ids)):
                if p != q and abs(p - q) <= window:
                    expected[ids[p], ids[q]] += 1.0 / abs(p - q)
        np.testing.assert_allclose(got, expected, atol=1e-12)


class TestEmbeddingIO:
    def test_round_trip_9_digits(self, tmp_path):
        rng = np.random.default_rng(0)
        from semie.embeddings import EmbeddingMatrix
        emb = EmbeddingMatrix(("a", "b", "c"), rng.standard_normal((3, 4)) * 100)
        p1 = tmp_path / "e1.vec"
        p2 = tmp_path / "e2.vec"
        save_embeddings(emb, str(p1))
        loaded = load_embeddings(str(p1))
        save_embeddings(loaded, str(p2))
        assert p1.read_bytes() == p2.read_bytes()
        assert loaded.tokens == emb.tokens
        np.testing.assert_allclose(loaded.vectors, emb.vectors, rtol=1e-8)
