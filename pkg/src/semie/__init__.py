"""Semantically infused word embeddings for labeled domain corpora.

Pipeline stages, each usable on its own:

- `semie.corpus`: ingestion, tokenization, vocabulary
- `semie.infusion`: class-anchor insertion
- `semie.sgns`: skip-gram negative-sampling training, co-occurrence
- `semie.pipdim`: dimensionality selection by pairwise-inner-product loss
- `semie.weighting`: anchor rank-distance semantic weighting
- `semie.snn`: sparse non-negative coding
- `semie.evaluate`: classification, intrusion tests, labels, triples
- `semie.pipeline` / `semie.cli`: end-to-end orchestration

The hot kernels run compiled when the extension modules built; check
`semie.kernel_backend()`.
"""

from ._kernels import BACKEND as _BACKEND
from .corpus import Corpus, Document, Vocab, build_vocab, ingest, tokenize
from .embeddings import EmbeddingMatrix, load_embeddings, save_embeddings
from .infusion import AnchorSet, infuse_corpus, infusion_frequency
from .pipdim import optimal_dimension, pip_loss, select_dimension
from .pipeline import PipelineConfig, load_config, run_pipeline
from .sgns import TrainConfig, cooccurrence, train
from .snn import SparseEmbeddingMatrix, load_sparse, save_sparse
from .weighting import infuse_semantics

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Which kernel implementation is active: 'cython' or 'python'."""
    return _BACKEND


__all__ = [
    "Corpus", "Document", "Vocab", "build_vocab", "ingest", "tokenize",
    "EmbeddingMatrix", "load_embeddings", "save_embeddings",
    "AnchorSet", "infuse_corpus", "infusion_frequency",
    "optimal_dimension", "pip_loss", "select_dimension",
    "PipelineConfig", "load_config", "run_pipeline",
    "TrainConfig", "cooccurrence", "train",
    "SparseEmbeddingMatrix", "load_sparse", "save_sparse",
    "infuse_semantics", "kernel_backend",
]
