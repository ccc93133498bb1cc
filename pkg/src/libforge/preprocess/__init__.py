"""Preparing training data: comments, embeddings, clustering, batches, curriculum."""
from __future__ import annotations

from .batching import batchify, curriculum_sort, mean_tokens, query_tokens, shuffle_batches
from .clustering import ClusteringError, Dendrogram, Merge, leaf_order, ward_cluster
from .comments import accept_commented, add_comments
from .embedding import EmbeddingError, EmbeddingVector, RemoteEmbedder, cosine, embed_texts, local_embed


def plan_batches(examples, k: int, provider="local", curriculum: bool = True, seed: int = 0) -> list[list]:
    """Cluster the queries, chunk the leaf order by ``k`` and order the batches.

    With ``curriculum=False`` the batches are shuffled by ``seed`` instead of
    sorted by query length.
    """
    examples = list(examples)
    if not examples:
        return []
    if len(examples) == 1:
        order = [0]
    else:
        order = ward_cluster(embed_texts([e.query for e in examples], provider)).leaf_order
    batches = [[examples[i] for i in chunk] for chunk in batchify(order, k)]
    return curriculum_sort(batches) if curriculum else shuffle_batches(batches, seed)


__all__ = [
    "ClusteringError", "Dendrogram", "EmbeddingError", "EmbeddingVector", "Merge", "RemoteEmbedder",
    "accept_commented", "add_comments", "batchify", "cosine", "curriculum_sort", "embed_texts",
    "leaf_order", "local_embed", "mean_tokens", "plan_batches", "query_tokens", "shuffle_batches",
    "ward_cluster",
]
