"""Alignment of pretrained embedding manifolds with a locality preserving loss.

The heavy lifting lives in the compiled `_core` module; this package
re-exports its operations. Matrices are float64 numpy arrays throughout,
rows are items, and every training entry point is deterministic given its
seed.
"""

from ._core import (
    ConfigError,
    DivergenceError,
    ParseError,
    accuracy,
    apply_map,
    knn_graph,
    lle_weights,
    load_embeddings,
    load_lexicon,
    load_map,
    normalize,
    pearson,
    precision_at_k,
    retrieve,
    save_embeddings,
    save_map,
    train_align,
    train_task,
)

__all__ = [
    "ConfigError",
    "DivergenceError",
    "ParseError",
    "accuracy",
    "apply_map",
    "knn_graph",
    "lle_weights",
    "load_embeddings",
    "load_lexicon",
    "load_map",
    "normalize",
    "pearson",
    "precision_at_k",
    "retrieve",
    "save_embeddings",
    "save_map",
    "train_align",
    "train_task",
]
