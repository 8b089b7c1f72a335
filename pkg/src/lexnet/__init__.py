"""Word co-occurrence and word similarity networks from tokenized corpora."""

from .corpus import (
    Corpus,
    NormalizationConfig,
    TokenizedText,
    Vocabulary,
    build_vocabulary,
    ingest_corpus,
    normalize_text,
    sample_vocabulary,
)
from .embedding import EmbeddingMatrix, TrainingConfig, cosine_similarity, train_sgns
from .graph import UndirectedGraph, build_wcn, build_wsn, estimate_similarity_threshold
from .netstats import StatsConfig, StructureReport, structure_report

__version__ = "0.1.0"

__all__ = [
    "Corpus", "NormalizationConfig", "TokenizedText", "Vocabulary",
    "build_vocabulary", "ingest_corpus", "normalize_text", "sample_vocabulary",
    "EmbeddingMatrix", "TrainingConfig", "cosine_similarity", "train_sgns",
    "UndirectedGraph", "build_wcn", "build_wsn", "estimate_similarity_threshold",
    "StatsConfig", "StructureReport", "structure_report",
]
