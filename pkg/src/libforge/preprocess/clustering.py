"""Ward agglomerative clustering.

Distances follow the variance-increase convention

    ward(A, B) = |A||B| / (|A| + |B|) * ||mean(A) - mean(B)||^2

so two singletons merge at half their squared Euclidean distance. (SciPy's
``linkage(method="ward")`` reports ``sqrt(2 * ward)`` instead.) Merged
clusters get SciPy-style ids n, n+1, ... and the cheapest pair is found
with ties broken by the smallest (a, b) id pair.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ClusteringError(ValueError):
    pass


@dataclass(frozen=True)
class Merge:
    a: int
    b: int
    distance: float
    size: int


@dataclass
class Dendrogram:
    n: int
    merges: list
    leaf_order: list

    def children(self, cluster: int) -> tuple[int, int] | None:
        if cluster < self.n:
            return None
        m = self.merges[cluster - self.n]
        return m.a, m.b


def _as_matrix(vectors) -> np.ndarray:
    rows = [v.values if hasattr(v, "values") else v for v in vectors]
    if len({len(r) for r in rows}) > 1:
        raise ClusteringError("all vectors must share one dimension")
    return np.asarray(rows, dtype=float)


def leaf_order(n: int, merges) -> list[int]:
    """In-order leaves of the tree, visiting the smaller-id child first."""
    if n == 1:
        return [0]
    order, stack = [], [n + len(merges) - 1]
    while stack:
        c = stack.pop()
        if c < n:
            order.append(c)
        else:
            m = merges[c - n]
            stack.append(max(m.a, m.b))
            stack.append(min(m.a, m.b))
    return order


def ward_cluster(vectors) -> Dendrogram:
    x = _as_matrix(vectors)
    n = len(x)
    if n < 2:
        raise ClusteringError("clustering needs at least two vectors")
    diff = x[:, None, :] - x[None, :, :]
    d = 0.5 * np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d, np.inf)
    ids = list(range(n))          # cluster id held by each slot
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        masked = np.where(active[:, None] & active[None, :], d, np.inf)
        best = masked.min()
        ii, jj = np.nonzero(masked == best)
        cands = [(min(ids[i], ids[j]), max(ids[i], ids[j]), i, j) for i, j in zip(ii, jj) if i < j]
        a, b, i, j = min(cands)
        ni, nj = size[i], size[j]
        nk = size
        # Lance-Williams update for the Ward criterion; merged cluster lives in slot i
        new = ((ni + nk) * d[i] + (nj + nk) * d[j] - nk * best) / (ni + nj + nk)
        d[i, :] = new
        d[:, i] = new
        d[i, i] = np.inf
        active[j] = False
        d[j, :] = np.inf
        d[:, j] = np.inf
        size[i] = ni + nj
        ids[i] = n + step
        merges.append(Merge(a, b, float(best), int(ni + nj)))
    return Dendrogram(n, merges, leaf_order(n, merges))

