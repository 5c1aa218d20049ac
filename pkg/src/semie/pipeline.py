"""End-to-end pipeline: ingest, infuse, select dimensionality, train
both arms, apply semantic weighting, sparse-code, evaluate.

A run is driven by a declarative key-value config (INI syntax) with
every seed explicit, writes each stage's artifacts under the output
directory, and finishes with a manifest recording artifact hashes,
seeds, timings, and the metric table comparing the baseline and the
semantically infused arm in dense and sparse space.  In single-worker
mode a rerun with the same config reproduces every artifact
byte-for-byte.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels, evaluate, pipdim, snn, weighting
from .corpus import Corpus, Vocab, build_vocab, ingest, save_vocab
from .embeddings import EmbeddingMatrix, save_embeddings
from .infusion import AnchorSet, infuse_corpus
from .sgns import TrainConfig, train
from .snn import save_sparse

__all__ = [
    "PipelineConfig",
    "StageError",
    "load_config",
    "run_pipeline",
    "STAGE_EXIT_CODES",
]

STAGE_EXIT_CODES = {
    "config": 1,
    "ingest": 2,
    "infuse": 3,
    "dim": 4,
    "train": 5,
    "infuse-semantics": 6,
    "snn": 7,
    "eval": 8,
}


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and exit code."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.exit_code = STAGE_EXIT_CODES.get(stage, 9)
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs.  All seeds are explicit by design; the
    loader rejects configs that omit one."""

    corpus_path: str
    corpus_format: str = "jsonl"
    min_count: int = 5
    infusion_seed: int = 0
    sgns: TrainConfig = field(default_factory=lambda: TrainConfig(dim=1))
    sgns_dim_override: int = 0          # 0: use the selected dimension
    pip_window: int = 5
    pip_alpha: float = 0.5
    pip_k_max: int = 512
    pip_seed: int = 0
    pip_per_arm: bool = False
    snn_l1: float = 0.5
    snn_l2: float = 1e-5
    snn_iters: int = 30
    snn_factor: int = 10                # sparse dim = factor * dense dim
    snn_seed: int = 0
    eval_train: int = 1600
    eval_test: int = 400
    eval_n_dims: int = 100
    eval_eps: float = 1e-6
    eval_top_k: int = 5
    eval_seed: int = 0
    out_dir: str = "run"


_REQUIRED_SEEDS = (
    ("infusion", "seed"), ("sgns", "seed"), ("pipdim", "seed"),
    ("snn", "seed"), ("eval", "seed"),
)


def load_config(path: str) -> PipelineConfig:
    """Parse the key-value config file (INI sections; see README for the
    schema).  Missing seeds are a validation error."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise StageError("config", FileNotFoundError(path))
    try:
        for section, key in _REQUIRED_SEEDS:
            if not parser.has_option(section, key):
                raise ValueError(f"config must set [{section}] {key} explicitly")
        corpus = parser["corpus"]
        sgns_sec = parser["sgns"] if parser.has_section("sgns") else {}
        pip_sec = parser["pipdim"] if parser.has_section("pipdim") else {}
        snn_sec = parser["snn"] if parser.has_section("snn") else {}
        eval_sec = parser["eval"] if parser.has_section("eval") else {}
        out_sec = parser["output"] if parser.has_section("output") else {}
        dim_override = int(sgns_sec.get("dim", 0))
        cfg = PipelineConfig(
            corpus_path=corpus["path"],
            corpus_format=corpus.get("format", "jsonl"),
            min_count=int(corpus.get("min_count", 5)),
            infusion_seed=int(parser["infusion"]["seed"]),
            sgns=TrainConfig(
                dim=max(dim_override, 1),
                window=int(sgns_sec.get("window", 5)),
                negative=int(sgns_sec.get("negative", 5)),
                epochs=int(sgns_sec.get("epochs", 5)),
                alpha=float(sgns_sec.get("alpha", 0.025)),
                subsample=float(sgns_sec.get("subsample", 1e-3)),
                seed=int(sgns_sec["seed"]),
                workers=int(sgns_sec.get("workers", 1)),
            ),
            sgns_dim_override=dim_override,
            pip_window=int(pip_sec.get("window", 5)),
            pip_alpha=float(pip_sec.get("alpha", 0.5)),
            pip_k_max=int(pip_sec.get("k_max", 512)),
            pip_seed=int(pip_sec["seed"]),
            pip_per_arm=str(pip_sec.get("per_arm", "false")).lower() == "true",
            snn_l1=float(snn_sec.get("l1", 0.5)),
            snn_l2=float(snn_sec.get("l2", 1e-5)),
            snn_iters=int(snn_sec.get("iters", 30)),
            snn_factor=int(snn_sec.get("factor", 10)),
            snn_seed=int(snn_sec["seed"]),
            eval_train=int(eval_sec.get("per_class_train", 1600)),
            eval_test=int(eval_sec.get("per_class_test", 400)),
            eval_n_dims=int(eval_sec.get("n_dims", 100)),
            eval_eps=float(eval_sec.get("eps", 1e-6)),
            eval_top_k=int(eval_sec.get("top_k", 5)),
            eval_seed=int(eval_sec["seed"]),
            out_dir=out_sec.get("dir", "run"),
        )
    except (KeyError, ValueError) as exc:
        raise StageError("config", exc) from exc
    return cfg


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class _Run:
    """Bookkeeping for one pipeline run: output guard, hashing, timing."""

    def __init__(self, out_dir: str, force: bool):
        self.root = Path(out_dir)
        self.force = force
        self.root.mkdir(parents=True, exist_ok=True)
        self.stages: list[dict] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        if p.exists() and not self.force:
            raise FileExistsError(
                f"{p} already exists; pass force=True (--force) to overwrite"
            )
        return p

    def record(self, stage: str, t0: float, artifacts: list[Path]) -> None:
        self.stages.append({
            "name": stage,
            "duration_s": round(time.perf_counter() - t0, 6),
            "artifacts": {p.name: _sha256(p) for p in artifacts},
        })


def _write_jsonl_corpus(corpus: Corpus, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            fh.write(json.dumps(
                {"text": " ".join(doc.tokens), "label": doc.label},
                sort_keys=True) + "\n")


def _write_curve(curve: np.ndarray, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("d,loss\n")
        for d, loss in enumerate(curve, start=1):
            fh.write(f"{d},{loss:.9g}\n")


def run_pipeline(cfg: PipelineConfig, force: bool = False) -> dict:
    """Execute every stage; returns the manifest (also written to
    `manifest.json` in the output directory).

    Any stage failure raises `StageError` after persisting the partial
    manifest; artifacts of completed stages stay on disk.
    """
    run = _Run(cfg.out_dir, force)
    manifest: dict = {
        "config": asdict(cfg),
        "backend": _kernels.BACKEND,
        "deterministic": cfg.sgns.workers == 1,
        "stages": run.stages,
        "metrics": {},
    }
    state: dict = {}
    try:
        for stage, fn in (
            ("ingest", _stage_ingest),
            ("infuse", _stage_infuse),
            ("dim", _stage_dim),
            ("train", _stage_train),
            ("infuse-semantics", _stage_weighting),
            ("snn", _stage_snn),
            ("eval", _stage_eval),
        ):
            t0 = time.perf_counter()
            try:
                artifacts = fn(cfg, run, state, manifest["metrics"])
            except Exception as exc:
                raise StageError(stage, exc) from exc
            run.record(stage, t0, artifacts)
    finally:
        with open(run.root / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return manifest


def _stage_ingest(cfg, run, state, metrics):
    corpus = ingest(cfg.corpus_path, cfg.corpus_format)
    vocab = build_vocab(corpus, cfg.min_count)
    state["corpus"] = corpus
    state["vocab_raw"] = vocab
    out = run.path("vocab_raw.tsv")
    save_vocab(vocab, out)
    metrics["corpus"] = {
        "documents": len(corpus), "dropped": corpus.n_dropped,
        "classes": len(corpus.labels), "vocab": len(vocab),
    }
    return [out]


def _stage_infuse(cfg, run, state, metrics):
    anchors = AnchorSet.for_corpus(state["corpus"])
    infused = infuse_corpus(state["corpus"], anchors, cfg.infusion_seed)
    vocab_inf = build_vocab(infused, cfg.min_count)
    vocab_inf, missing = vocab_inf.mark_anchors(anchors.tokens)
    state["anchors"] = anchors
    state["infused"] = infused
    state["vocab_inf"] = vocab_inf
    p_corpus = run.path("infused.jsonl")
    _write_jsonl_corpus(infused, p_corpus)
    p_anchors = run.path("anchors.tsv")
    anchors.save(p_anchors)
    p_vocab = run.path("vocab_infused.tsv")
    save_vocab(vocab_inf, p_vocab)
    metrics["infuse"] = {
        "anchors": len(anchors), "anchors_missing_from_vocab": missing,
        "vocab": len(vocab_inf),
    }
    return [p_corpus, p_anchors, p_vocab]


def _selected_dim(cfg, d: int, vocabs) -> int:
    cap = min(len(v) for v in vocabs) - 1
    return max(1, min(d, cap))


def _stage_dim(cfg, run, state, metrics):
    if cfg.sgns_dim_override > 0:
        state["dim"] = cfg.sgns_dim_override
        state["dim_baseline"] = cfg.sgns_dim_override
        metrics["dim"] = {"selected": state["dim"], "source": "config override"}
        return []
    d, curve, est = pipdim.select_dimension(
        state["infused"], state["vocab_inf"], window=cfg.pip_window,
        alpha=cfg.pip_alpha, k_max=cfg.pip_k_max, seed=cfg.pip_seed)
    d = _selected_dim(cfg, d, [state["vocab_inf"], state["vocab_raw"]])
    state["dim"] = d
    p_curve = run.path("pip_curve.csv")
    _write_curve(curve, p_curve)
    artifacts = [p_curve]
    if cfg.pip_per_arm:
        d_b, curve_b, _ = pipdim.select_dimension(
            state["corpus"], state["vocab_raw"], window=cfg.pip_window,
            alpha=cfg.pip_alpha, k_max=cfg.pip_k_max, seed=cfg.pip_seed)
        d_b = _selected_dim(cfg, d_b, [state["vocab_raw"]])
        p_curve_b = run.path("pip_curve_baseline.csv")
        _write_curve(curve_b, p_curve_b)
        artifacts.append(p_curve_b)
    else:
        d_b = d
    state["dim_baseline"] = d_b
    metrics["dim"] = {
        "selected": d, "baseline": d_b,
        "sigma": est.sigma, "k_max": est.k_max, "side": est.side,
    }
    return artifacts


def _stage_train(cfg, run, state, metrics):
    anchors = state["anchors"]
    vocab_raw: Vocab = state["vocab_raw"]
    # the baseline arm must never see anchor tokens
    assert not any(t in vocab_raw for t in anchors.tokens), \
        "anchor tokens leaked into the baseline vocabulary"
    cfg_inf = _train_cfg(cfg, state["dim"])
    cfg_base = _train_cfg(cfg, state["dim_baseline"])
    emb_inf, stats_inf = train(state["infused"], state["vocab_inf"],
                               cfg_inf, return_stats=True)
    emb_base, stats_base = train(state["corpus"], vocab_raw,
                                 cfg_base, return_stats=True)
    state["emb_inf"] = emb_inf
    state["emb_base"] = emb_base
    p_inf = run.path("infused.vec")
    save_embeddings(emb_inf, p_inf)
    p_base = run.path("baseline.vec")
    save_embeddings(emb_base, p_base)
    metrics["train"] = {
        "heldout_loss_infused": stats_inf.heldout_loss,
        "heldout_loss_baseline": stats_base.heldout_loss,
    }
    return [p_inf, p_base]


def _train_cfg(cfg: PipelineConfig, dim: int) -> TrainConfig:
    base = cfg.sgns
    return TrainConfig(dim=dim, window=base.window, negative=base.negative,
                       epochs=base.epochs, alpha=base.alpha,
                       subsample=base.subsample, seed=base.seed,
                       workers=base.workers)


def _stage_weighting(cfg, run, state, metrics):
    emb_semie = weighting.infuse_semantics(state["emb_inf"], state["anchors"])
    state["emb_semie"] = emb_semie
    p = run.path("semie.vec")
    save_embeddings(emb_semie, p)
    return [p]


def _stage_snn(cfg, run, state, metrics):
    artifacts = []
    metrics["snn"] = {}
    for arm, emb in (("semie", state["emb_semie"]),
                     ("baseline", state["emb_base"])):
        K = cfg.snn_factor * emb.dim
        dictionary, sparse = snn.fit(
            emb, K, l1=cfg.snn_l1, l2=cfg.snn_l2,
            iters=cfg.snn_iters, seed=cfg.snn_seed)
        state[f"snn_{arm}"] = sparse
        p_codes = run.path(f"{arm}.snn")
        save_sparse(sparse, p_codes)
        p_dict = run.path(f"{arm}.dict")
        save_embeddings(
            EmbeddingMatrix(tuple(f"atom{i}" for i in range(K)),
                            dictionary.atoms), p_dict)
        artifacts += [p_codes, p_dict]
        metrics["snn"][arm] = {
            "K": K,
            "sparsity": sparse.sparsity,
            "reconstruction_error": sparse.stats.reconstruction_error,
        }
    return artifacts


def _stage_eval(cfg, run, state, metrics):
    anchors: AnchorSet = state["anchors"]
    corpus = state["corpus"]
    artifacts = []

    dense = {
        "semie": state["emb_semie"].drop(anchors.tokens),
        "baseline": state["emb_base"],
    }
    sparse = {
        "semie": state["snn_semie"].drop(anchors.tokens),
        "baseline": state["snn_baseline"],
    }

    # classification, both arms, dense and sparse space
    cls: dict = {"dense": {}, "snn": {}}
    reports = {}
    for space, mats in (("dense", dense), ("snn", sparse)):
        for arm, mat in mats.items():
            rep = evaluate.train_eval_classifier(
                mat, corpus, cfg.eval_train, cfg.eval_test, cfg.eval_seed)
            cls[space][arm] = rep.accuracy
            reports[f"{space}_{arm}"] = rep.to_dict()
    p_cls = run.path("classification.json")
    with open(p_cls, "w", encoding="utf-8") as fh:
        json.dump(reports, fh, indent=2, sort_keys=True)
        fh.write("\n")
    artifacts.append(p_cls)
    metrics["classification"] = cls

    # intrusion tests on the sparse arms, judged in the arm's dense space
    intr = {}
    for arm in ("semie", "baseline"):
        tests, skipped = evaluate.generate_intrusion_tests(
            sparse[arm], cfg.eval_n_dims, cfg.eval_seed)
        precision, _ = (
            evaluate.judge_tests(tests, dense[arm]) if tests else (0.0, [])
        )
        p_tests = run.path(f"intrusion_{arm}.jsonl")
        evaluate.write_intrusion_tests(tests, p_tests)
        artifacts.append(p_tests)
        intr[arm] = {"proxy_precision": precision, "n_tests": len(tests),
                     "skipped_dims": len(skipped)}
    metrics["intrusion_proxy"] = intr

    # dimension labels and triples need the anchor rows: semie arm only
    labels = evaluate.label_dimensions(
        state["snn_semie"], anchors, top_k=cfg.eval_top_k, eps=cfg.eval_eps)
    p_labels = run.path("labels.tsv")
    evaluate.write_labels(labels, p_labels)
    artifacts.append(p_labels)
    metrics["labels"] = {
        "labeled": sum(1 for l in labels if l.anchor is not None),
        "total": len(labels),
    }

    tokens = anchors.tokens
    triple_reports = [
        evaluate.extract_triples(state["snn_semie"], a1, a2,
                                 eps=cfg.eval_eps, top_k=cfg.eval_top_k)
        for i, a1 in enumerate(tokens) for a2 in tokens[i + 1:]
    ]
    p_triples = run.path("triples.csv")
    evaluate.write_triples_csv(triple_reports, p_triples)
    artifacts.append(p_triples)
    metrics["triples"] = {
        "discriminative": sum(len(r.discriminative) for r in triple_reports),
        "non_discriminative": sum(len(r.non_discriminative) for r in triple_reports),
    }
    return artifacts
