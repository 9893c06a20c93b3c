"""Transformed word embeddings for linking tweets with news articles."""

__version__ = "0.1.0"

from .alignment import (  # noqa: E402
    AlignmentModel,
    Direction,
    PairedVocabulary,
    apply_alignment,
    common_vocab,
    fit_and_transform_crosslingual,
    load_model,
    procrustes_fit,
    save_model,
)
from .embeddings import Collection, EmbeddingSet, load_embeddings, lookup, save_embeddings  # noqa: E402
from .lexical import RankedList, avg_rbo, nearest_neighbors, rbo  # noqa: E402
from .text import Document, doc_embedding, preprocess, tf_idf  # noqa: E402

__all__ = [
    "AlignmentModel",
    "Collection",
    "Direction",
    "Document",
    "EmbeddingSet",
    "PairedVocabulary",
    "RankedList",
    "apply_alignment",
    "avg_rbo",
    "common_vocab",
    "doc_embedding",
    "fit_and_transform_crosslingual",
    "load_embeddings",
    "load_model",
    "lookup",
    "nearest_neighbors",
    "preprocess",
    "procrustes_fit",
    "rbo",
    "save_embeddings",
    "save_model",
    "tf_idf",
]
