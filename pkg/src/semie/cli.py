"""Command-line interface.

Subcommands mirror the pipeline stages (ingest, infuse, dim, train,
infuse-semantics, snn, eval) plus `run` for the whole thing.  Exit code
0 on success; failures exit with the failed stage's code (see
`semie.pipeline.STAGE_EXIT_CODES`).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import evaluate, pipdim, snn, weighting
from .corpus import CorpusError, build_vocab, ingest, save_vocab
from .embeddings import load_embeddings, save_embeddings
from .infusion import AnchorSet, anchor_token, infuse_corpus
from .pipeline import (STAGE_EXIT_CODES, StageError, load_config,
                       run_pipeline, _write_curve, _write_jsonl_corpus)
from .sgns import TrainConfig, train
from .snn import load_sparse, save_sparse


def _fail(stage: str, message: str) -> int:
    print(f"error [{stage}]: {message}", file=sys.stderr)
    return STAGE_EXIT_CODES.get(stage, 9)


def _load_matrix(path: str):
    return load_sparse(path) if path.endswith(".snn") else load_embeddings(path)


def cmd_ingest(args) -> int:
    corpus = ingest(args.infile, args.format)
    vocab = build_vocab(corpus, args.min_count)
    save_vocab(vocab, args.vocab_out)
    print(f"{len(corpus)} documents ({corpus.n_dropped} dropped), "
          f"{len(corpus.labels)} classes, vocabulary {len(vocab)}")
    return 0


def cmd_infuse(args) -> int:
    corpus = ingest(args.infile, args.format)
    anchors = AnchorSet.for_corpus(corpus)
    infused = infuse_corpus(corpus, anchors, args.seed)
    _write_jsonl_corpus(infused, args.out)
    if args.anchors_out:
        anchors.save(args.anchors_out)
    print(f"infused {len(infused)} documents with {len(anchors)} anchors")
    return 0


def cmd_dim(args) -> int:
    corpus = ingest(args.infile, args.format)
    vocab = build_vocab(corpus, args.min_count)
    d, curve, est = pipdim.select_dimension(
        corpus, vocab, window=args.window, alpha=args.alpha,
        k_max=args.kmax, seed=args.seed)
    if args.curve_out:
        _write_curve(curve, args.curve_out)
    print(f"selected dimension: {d} (sigma={est.sigma:.6g}, "
          f"k_max={est.k_max}, vocabulary {len(vocab)})")
    return 0


def cmd_train(args) -> int:
    corpus = ingest(args.infile, args.format)
    vocab = build_vocab(corpus, args.min_count)
    if any(t.startswith("A_") for t in vocab.id_to_token):
        vocab, missing = vocab.mark_anchors(
            [t for t in vocab.id_to_token if t.startswith("A_")])
    cfg = TrainConfig(dim=args.dim, window=args.window, negative=args.negative,
                      epochs=args.epochs, alpha=args.alpha,
                      subsample=args.subsample, seed=args.seed,
                      workers=args.workers)
    emb = train(corpus, vocab, cfg)
    save_embeddings(emb, args.out)
    print(f"trained {len(emb)} x {emb.dim} embeddings -> {args.out}")
    return 0


def cmd_weighting(args) -> int:
    emb = load_embeddings(args.emb)
    anchors = AnchorSet.load(args.anchors)
    out = weighting.infuse_semantics(emb, anchors, aggregate=args.aggregate)
    save_embeddings(out, args.out)
    print(f"semantically weighted {len(out)} x {out.dim} embeddings -> {args.out}")
    return 0


def cmd_snn(args) -> int:
    emb = load_embeddings(args.emb)
    K = args.k if args.k else args.factor * emb.dim
    dictionary, sparse = snn.fit(emb, K, l1=args.l1, l2=args.l2,
                                 iters=args.iters, seed=args.seed)
    save_sparse(sparse, args.out)
    if args.dict_out:
        from .embeddings import EmbeddingMatrix
        save_embeddings(EmbeddingMatrix(
            tuple(f"atom{i}" for i in range(K)), dictionary.atoms),
            args.dict_out)
    print(f"sparse codes {len(sparse)} x {sparse.dim}, "
          f"sparsity {sparse.sparsity:.3f} -> {args.out}")
    return 0


def cmd_eval_classify(args) -> int:
    mat = _load_matrix(args.emb)
    corpus = ingest(args.corpus, args.format)
    if args.drop_anchors:
        anchors = AnchorSet.load(args.drop_anchors)
        mat = mat.drop(anchors.tokens)
    rep = evaluate.train_eval_classifier(
        mat, corpus, args.train, args.test, args.seed)
    rep.save(args.out)
    print(f"accuracy {rep.accuracy:.4f} "
          f"(train {rep.train_size}, test {rep.test_size}) -> {args.out}")
    return 0


def cmd_eval_intrude(args) -> int:
    mat = _load_matrix(args.emb)
    if args.drop_anchors:
        anchors = AnchorSet.load(args.drop_anchors)
        mat = mat.drop(anchors.tokens)
    tests, skipped = evaluate.generate_intrusion_tests(
        mat, args.n_dims, args.seed)
    evaluate.write_intrusion_tests(tests, args.out, blind=args.blind)
    print(f"{len(tests)} tests written ({len(skipped)} dims skipped) -> {args.out}")
    if args.ref:
        ref = load_embeddings(args.ref)
        if args.drop_anchors:
            ref = ref.drop(anchors.tokens)
        precision, _ = evaluate.judge_tests(tests, ref)
        report = {"n_tests": len(tests), "proxy_precision": precision}
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                json.dump(report, fh, indent=2, sort_keys=True)
                fh.write("\n")
        print(f"proxy precision {precision:.3f}")
    return 0


def cmd_eval_label(args) -> int:
    mat = _load_matrix(args.emb)
    anchors = AnchorSet.load(args.anchors)
    labels = evaluate.label_dimensions(mat, anchors, top_k=args.top_k,
                                       eps=args.eps)
    evaluate.write_labels(labels, args.out)
    n = sum(1 for l in labels if l.anchor is not None)
    print(f"{n}/{len(labels)} dimensions labeled -> {args.out}")
    return 0


def cmd_eval_triples(args) -> int:
    mat = _load_matrix(args.emb)
    anchors = AnchorSet.load(args.anchors)
    a1, a2 = anchor_token(args.concept1), anchor_token(args.concept2)
    report = evaluate.extract_triples(mat, a1, a2, eps=args.eps,
                                      top_k=args.top_k)
    evaluate.write_triples_csv(report, args.out)
    print(f"{len(report.discriminative)} discriminative, "
          f"{len(report.non_discriminative)} non-discriminative -> {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    manifest = run_pipeline(cfg, force=args.force)
    m = manifest["metrics"]
    print(f"pipeline complete: d={m['dim']['selected']}, "
          f"dense accuracy baseline={m['classification']['dense']['baseline']:.4f} "
          f"semie={m['classification']['dense']['semie']:.4f}; "
          f"manifest -> {cfg.out_dir}/manifest.json")
    return 0


def _corpus_args(p, with_min_count=True):
    p.add_argument("--in", dest="infile", required=True, help="corpus file")
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    if with_min_count:
        p.add_argument("--min-count", dest="min_count", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="semie",
        description="Semantically infused embedding pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read a corpus and dump its vocabulary")
    _corpus_args(p)
    p.add_argument("--vocab-out", required=True)
    p.set_defaults(fn=cmd_ingest, stage="ingest")

    p = sub.add_parser("infuse", help="insert class anchors into every document")
    _corpus_args(p, with_min_count=False)
    p.add_argument("--out", required=True, help="infused JSONL output")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--anchors-out", help="write the label->anchor map (TSV)")
    p.set_defaults(fn=cmd_infuse, stage="infuse")

    p = sub.add_parser("dim", help="select embedding dimensionality")
    _corpus_args(p)
    p.add_argument("--kmax", type=int, default=512)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--curve-out", help="write the loss curve as CSV (d,loss)")
    p.set_defaults(fn=cmd_dim, stage="dim")

    p = sub.add_parser("train", help="train skip-gram embeddings")
    _corpus_args(p)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negative", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.025)
    p.add_argument("--subsample", type=float, default=1e-3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train, stage="train")

    p = sub.add_parser("infuse-semantics",
                       help="apply anchor rank-distance weighting")
    p.add_argument("--emb", required=True)
    p.add_argument("--anchors", required=True)
    p.add_argument("--aggregate", choices=["sum", "nearest"], default="sum")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_weighting, stage="infuse-semantics")

    p = sub.add_parser("snn", help="sparse non-negative transform")
    p.add_argument("--emb", required=True)
    p.add_argument("--l1", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=1e-5)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--factor", type=int, default=10,
                   help="sparse dim = factor * dense dim")
    p.add_argument("--k", type=int, default=0, help="explicit sparse dim")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dict-out", help="save the dictionary atoms")
    p.set_defaults(fn=cmd_snn, stage="snn")

    pe = sub.add_parser("eval", help="evaluation suites")
    esub = pe.add_subparsers(dest="eval_command", required=True)

    p = esub.add_parser("classify")
    p.add_argument("--emb", required=True, help=".vec or .snn matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--train", type=int, default=1600)
    p.add_argument("--test", type=int, default=400)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--drop-anchors", help="anchors TSV; remove these rows first")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval_classify, stage="eval")

    p = esub.add_parser("intrude")
    p.add_argument("--emb", required=True)
    p.add_argument("--n-dims", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--blind", action="store_true",
                   help="omit answer keys for human annotation")
    p.add_argument("--drop-anchors", help="anchors TSV; remove these rows first")
    p.add_argument("--ref", help="dense reference matrix for the proxy judge")
    p.add_argument("--report", help="write the proxy precision JSON here")
    p.set_defaults(fn=cmd_eval_intrude, stage="eval")

    p = esub.add_parser("label")
    p.add_argument("--emb", required=True)
    p.add_argument("--anchors", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval_label, stage="eval")

    p = esub.add_parser("triples")
    p.add_argument("--emb", required=True)
    p.add_argument("--anchors", required=True)
    p.add_argument("--a1", dest="concept1", required=True, help="first concept (class label)")
    p.add_argument("--a2", dest="concept2", required=True, help="second concept (class label)")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval_triples, stage="eval")

    p = sub.add_parser("run", help="run the whole pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--force", action="store_true",
                   help="overwrite existing stage outputs")
    p.set_defaults(fn=cmd_run, stage="config")

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return exc.exit_code
    except (CorpusError, OSError, ValueError, KeyError) as exc:
        return _fail(args.stage, str(exc))


if __name__ == "__main__":
    sys.exit(main())
