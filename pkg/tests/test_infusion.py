"""Tests for anchor naming and infusion placement."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semie.corpus import Corpus, Document
from semie.infusion import (AnchorCollisionError, AnchorSet, anchor_token,
                            concept_name, infuse_corpus, infuse_document,
                            infusion_frequency, strip_anchors)


class TestAnchorNaming:
    def test_spaces_become_underscores(self):
        assert anchor_token("Seat Belts") == "A_Seat_Belts"
        assert anchor_token("India") == "A_India"

    def test_concept_name_inverts(self):
        assert concept_name("A_Seat_Belts") == "Seat Belts"
        with pytest.raises(ValueError):
            concept_name("notananchor")

    def test_collision_with_corpus_token_rejected(self):
        corpus = Corpus((Document(("x", "A_India"), "India"),))
        with pytest.raises(AnchorCollisionError):
            AnchorSet.for_corpus(corpus)

    def test_save_load(self, tmp_path):
        corpus = Corpus((Document(("x",), "Seat Belts"), Document(("y",), "Tires")))
        anchors = AnchorSet.for_corpus(corpus)
        p = tmp_path / "anchors.tsv"
        anchors.save(str(p))
        again = AnchorSet.load(str(p))
        assert again.by_label == anchors.by_label


class TestInfusionFrequency:
    @pytest.mark.parametrize("length,expected", [
        (1, 1), (2, 1), (4, 1), (5, 2), (16, 2), (17, 3), (100, 4), (256, 4),
    ])
    def test_values(self, length, expected):
        assert infusion_frequency(length) == expected

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            infusion_frequency(0)

    @given(st.integers(min_value=1, max_value=10**6))
    def test_matches_formula(self, n):
        assert infusion_frequency(n) == max(1, math.ceil(math.log2(n) / 2))


def _check_infused(original: Document, infused: Document, anchor: str):
    toks = infused.tokens
    k = sum(1 for t in toks if t == anchor)
    expected = min(infusion_frequency(len(original.tokens)),
                   len(original.tokens) + 1)
    assert k == expected, "anchor count must follow the frequency rule"
    for a, b in zip(toks, toks[1:]):
        assert not (a == anchor and b == anchor), "anchors must not be adjacent"
    assert tuple(t for t in toks if t != anchor) == original.tokens


class TestInfuseDocument:
    def test_single_token_doc(self):
        doc = Document(("hello",), "x")
        out = infuse_document(doc, "A_x", np.random.default_rng(0))
        assert len(out.tokens) == 2
        assert sorted(out.tokens) == ["A_x", "hello"]

    def test_ten_token_doc_gets_two(self):
        doc = Document(tuple("abcdefghij"), "x")
        out = infuse_document(doc, "A_x", np.random.default_rng(1))
        _check_infused(doc, out, "A_x")
        assert len(out.tokens) == 12

    def test_deterministic_for_seed(self):
        doc = Document(tuple(str(i) for i in range(50)), "x")
        a = infuse_document(doc, "A_x", np.random.default_rng(7))
        b = infuse_document(doc, "A_x", np.random.default_rng(7))
        assert a.tokens == b.tokens

    def test_exhaustive_property_scan(self):
        # brute-force check of count, non-adjacency, order on 1000 random docs
        rng = np.random.default_rng(42)
        for i in range(1000):
            n = int(rng.integers(1, 120))
            doc = Document(tuple(f"w{j}" for j in range(n)), "x")
            out = infuse_document(doc, "A_x", np.random.default_rng((5, i)))
            _check_infused(doc, out, "A_x")


class TestInfuseCorpus:
    def _corpus(self):
        docs = [Document(tuple(f"w{i}{j}" for j in range(10 + i)), f"c{i % 3}")
                for i in range(30)]
        return Corpus(tuple(docs))

    def test_vocabulary_grows_by_class_count(self):
        corpus = self._corpus()
        anchors = AnchorSet.for_corpus(corpus)
        infused = infuse_corpus(corpus, anchors, seed=3)
        before = {t for d in corpus for t in d.tokens}
        after = {t for d in infused for t in d.tokens}
        assert after == before | set(anchors.tokens)
        assert len(after) == len(before) + 3

    def test_label_without_anchor_rejected(self):
        corpus = self._corpus()
        anchors = AnchorSet({"c0": "A_c0", "c1": "A_c1"})  # c2 missing
        with pytest.raises(KeyError, match="c2"):
            infuse_corpus(corpus, anchors, seed=0)

    def test_empty_class_warns(self):
        corpus = Corpus((Document(("a", "b"), "c0"),))
        anchors = AnchorSet({"c0": "A_c0", "ghost": "A_ghost"})
        with pytest.warns(UserWarning, match="ghost"):
            infused = infuse_corpus(corpus, anchors, seed=0)
        assert all("A_ghost" not in d.tokens for d in infused)

    def test_seed_reproducible(self):
        corpus = self._corpus()
        anchors = AnchorSet.for_corpus(corpus)
        a = infuse_corpus(corpus, anchors, seed=11)
        b = infuse_corpus(corpus, anchors, seed=11)
        assert all(x.tokens == y.tokens for x, y in zip(a, b))
        c = infuse_corpus(corpus, anchors, seed=12)
        assert any(x.tokens != y.tokens for x, y in zip(a, c))

    def test_strip_anchors_recovers_original(self):
        corpus = self._corpus()
        anchors = AnchorSet.for_corpus(corpus)
        infused = infuse_corpus(corpus, anchors, seed=5)
        for orig, inf in zip(corpus, infused):
            assert strip_anchors(inf).tokens == orig.tokens
