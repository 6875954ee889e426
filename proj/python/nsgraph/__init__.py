"""Neighbourhood-similarity kNN graph toolkit."""

from ._nsgraph import (
    EdgeScores,
    KnnGraph,
    NsgraphError,
    build_knn,
    combined_similarity,
    f_measure,
    filter_edges,
    ks_count,
    load_idx,
    merge_clusters,
    ncut,
    reassign_small,
    scc,
    score_edges,
    shared_neighbors,
    suggest_merges,
    sweep,
    two_spirals,
)

__all__ = [
    "EdgeScores",
    "KnnGraph",
    "NsgraphError",
    "build_knn",
    "combined_similarity",
    "f_measure",
    "filter_edges",
    "ks_count",
    "load_idx",
    "merge_clusters",
    "ncut",
    "reassign_small",
    "scc",
    "score_edges",
    "shared_neighbors",
    "suggest_merges",
    "sweep",
    "two_spirals",
]
