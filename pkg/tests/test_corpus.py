"""Tests for ingestion, tokenization, and vocabulary construction."""

import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semie.corpus import (CorpusError, Vocab, build_vocab, ingest,
                          load_vocab, save_vocab, tokenize)
from semie.synthetic import planted_corpus


class TestTokenize:
    def test_lowercase_and_punctuation(self):
        assert tokenize("New procurement scheme!") == ["new", "procurement", "scheme"]

    def test_empty(self):
        assert tokenize("") == []

    def test_hyphen_is_boundary(self):
        assert tokenize("seat-belt buckle") == ["seat", "belt", "buckle"]

    def test_punctuation_only_fragments_dropped(self):
        assert tokenize("... --- !!!") == []

    def test_anchor_tokens_pass_through(self):
        assert tokenize("new A_India procurement") == ["new", "A_India", "procurement"]
        assert tokenize("A_Seat_Belts failed") == ["A_Seat_Belts", "failed"]

    def test_bare_prefix_is_not_an_anchor(self):
        assert tokenize("A_ b") == ["a", "b"]

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_idempotent(self, raw):
        once = tokenize(raw)
        assert tokenize(" ".join(once)) == once


class TestIngest:
    def test_jsonl(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps(
            {"text": "seat belt failed to buckle", "label": "Seat Belts"}) + "\n")
        corpus = ingest(str(p), "jsonl")
        assert len(corpus) == 1
        assert corpus.documents[0].tokens == ("seat", "belt", "failed", "to", "buckle")
        assert corpus.documents[0].label == "Seat Belts"

    def test_csv_with_blank_text_dropped(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("text,label\nfirst doc,a\n,a\nsecond doc,b\n")
        corpus = ingest(str(p), "csv")
        assert len(corpus) == 2
        assert corpus.n_dropped == 1

    def test_empty_corpus_rejected(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps({"text": "...", "label": "x"}) + "\n")
        with pytest.raises(CorpusError, match="empty corpus"):
            ingest(str(p), "jsonl")

    def test_malformed_record_reports_line(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"text": "ok", "label": "a"}\nnot json\n')
        with pytest.raises(CorpusError, match=":2"):
            ingest(str(p), "jsonl")

    def test_missing_field_rejected(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps({"text": "no label here"}) + "\n")
        with pytest.raises(CorpusError, match="label"):
            ingest(str(p), "jsonl")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(CorpusError, match="unknown corpus format"):
            ingest(str(tmp_path / "c.xml"), "xml")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(CorpusError, match="cannot read"):
            ingest(str(tmp_path / "missing.jsonl"), "jsonl")

    def test_documents_keep_file_order(self, tmp_path):
        p = tmp_path / "c.jsonl"
        lines = [json.dumps({"text": f"doc number {i}", "label": "x"}) for i in range(20)]
        p.write_text("\n".join(lines) + "\n")
        corpus = ingest(str(p), "jsonl")
        assert [d.tokens[2] for d in corpus] == [str(i) for i in range(20)]


def _corpus_from_texts(texts, label="x"):
    from semie.corpus import Corpus, Document
    return Corpus(tuple(Document(tuple(t.split()), label) for t in texts))


class TestBuildVocab:
    def test_counts_and_order(self):
        corpus = _corpus_from_texts(["a a b", "a c"])
        vocab = build_vocab(corpus, min_count=1)
        assert len(vocab) == 3
        assert vocab.id("a") == 0  # most frequent first
        assert vocab.count("a") == 3

    def test_min_count_threshold(self):
        corpus = _corpus_from_texts(["a a b", "a c"])
        vocab = build_vocab(corpus, min_count=2)
        assert len(vocab) == 1 and "a" in vocab

    def test_all_below_min_count(self):
        corpus = _corpus_from_texts(["a b c"])
        with pytest.raises(CorpusError, match="empty vocabulary"):
            build_vocab(corpus, min_count=5)

    def test_tie_break_lexicographic(self):
        corpus = _corpus_from_texts(["b a", "a b"])
        vocab = build_vocab(corpus, min_count=1)
        assert vocab.id("a") == 0 and vocab.id("b") == 1

    def test_synthetic_matches_independent_recount(self):
        # independent hash-count oracle over a 10k-doc synthetic corpus
        corpus = planted_corpus(n_classes=4, docs_per_class=2500,
                                exclusive_per_class=50, pair_words=20,
                                shared_words=30, doc_len=(3, 12), seed=9)
        min_count = 3
        vocab = build_vocab(corpus, min_count=min_count)
        oracle = Counter(t for d in corpus for t in d.tokens)
        expected = {t for t, n in oracle.items() if n >= min_count}
        assert len(vocab) == len(expected)
        assert set(vocab.id_to_token) == expected
        for tok in expected:
            assert vocab.count(tok) == oracle[tok]

    def test_deterministic_across_runs(self):
        corpus = planted_corpus(n_classes=3, docs_per_class=50, seed=2)
        v1 = build_vocab(corpus, min_count=1)
        v2 = build_vocab(corpus, min_count=1)
        assert v1.id_to_token == v2.id_to_token

    def test_frequency_sum_matches_total(self):
        corpus = planted_corpus(n_classes=3, docs_per_class=40, seed=5)
        vocab = build_vocab(corpus, min_count=1)
        assert sum(vocab.counts) == corpus.total_tokens()


class TestVocabRoundTrip:
    def test_save_load(self, tmp_path):
        corpus = _corpus_from_texts(["a a b", "a c d d d"])
        vocab = build_vocab(corpus, min_count=1)
        path = tmp_path / "vocab.tsv"
        save_vocab(vocab, str(path))
        again = load_vocab(str(path))
        assert again.id_to_token == vocab.id_to_token
        assert again.counts == vocab.counts

    def test_mark_anchors(self):
        corpus = _corpus_from_texts(["a A_x b", "a A_x"])
        vocab = build_vocab(corpus, min_count=1)
        marked, missing = vocab.mark_anchors(["A_x", "A_y"])
        assert marked.anchor_ids == {vocab.id("A_x")}
        assert missing == ["A_y"]

    def test_encode_skips_oov(self):
        corpus = _corpus_from_texts(["a a b"])
        vocab = build_vocab(corpus, min_count=2)
        assert vocab.encode(["a", "b", "zzz"]) == [vocab.id("a")]
