"""Batch formation and curriculum ordering."""
from __future__ import annotations

import random
from statistics import fmean


def batchify(order, k: int) -> list[list]:
    """Chunk a leaf order (or a dendrogram's) into consecutive groups of ``k``."""
    if k < 1:
        raise ValueError("batch size must be >= 1")
    order = list(getattr(order, "leaf_order", order))
    return [order[i:i + k] for i in range(0, len(order), k)]


def query_tokens(query: str) -> int:
    return len(query.split())


def mean_tokens(batch) -> float:
    return fmean(query_tokens(ex.query) for ex in batch) if batch else 0.0


def curriculum_sort(batches: list) -> list:
    """Batches of examples, shortest mean query first; ties keep their order."""
    return sorted(batches, key=mean_tokens)


def shuffle_batches(batches: list, seed: int) -> list:
    out = list(batches)
    random.Random(seed).shuffle(out)
    return out
