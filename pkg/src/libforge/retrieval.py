"""Exact cosine-similarity index over training queries, demos and helpers."""
from __future__ import annotations

import numpy as np

from .preprocess.embedding import EmbeddingError, embed_texts

TRAIN = "train-example"
DEMO = "demo"
HELPER = "helper"
KINDS = (TRAIN, DEMO, HELPER)


class VectorIndex:
    def __init__(self, provider="local"):
        self.provider = provider
        self.dim = None
        self._keys = {k: [] for k in KINDS}
        self._rows = {k: [] for k in KINDS}
        self._payload = {k: {} for k in KINDS}
        self._matrix = {}

    def __len__(self) -> int:
        return sum(len(v) for v in self._keys.values())

    def keys(self, kind: str) -> list:
        return list(self._keys[kind])

    def payload(self, kind: str, key):
        return self._payload[kind][key]

    def add(self, key, vector, kind: str, payload=None) -> None:
        if kind not in KINDS:
            raise ValueError(f"unknown entry kind {kind!r}")
        v = np.asarray(getattr(vector, "values", vector), dtype=float)
        if self.dim is None:
            self.dim = len(v)
        elif len(v) != self.dim:
            raise EmbeddingError(f"dimension mismatch: index has {self.dim}, vector has {len(v)}")
        norm = np.linalg.norm(v)
        if norm == 0:
            raise EmbeddingError("zero vectors cannot be indexed")
        if key in self._payload[kind]:
            raise ValueError(f"duplicate {kind} key {key!r}")
        self._keys[kind].append(key)
        self._rows[kind].append(v / norm)
        self._payload[kind][key] = payload
        self._matrix.pop(kind, None)

    def add_texts(self, items, kind: str) -> None:
        """``items``: (key, text, payload) triples, embedded with the index provider."""
        items = list(items)
        if not items:
            return
        vecs = embed_texts([t for _, t, _ in items], self.provider)
        for (key, _, payload), v in zip(items, vecs):
            self.add(key, v, kind, payload)

    def similarities(self, query, kind: str) -> np.ndarray:
        q = np.asarray(getattr(query, "values", query), dtype=float)
        if self.dim is not None and len(q) != self.dim:
            raise EmbeddingError(f"dimension mismatch: index has {self.dim}, query has {len(q)}")
        if not self._keys[kind]:
            return np.zeros(0)
        if kind not in self._matrix:
            self._matrix[kind] = np.vstack(self._rows[kind])
        return self._matrix[kind] @ (q / np.linalg.norm(q))

    def topk(self, query, n: int, kind: str) -> list[tuple]:
        """The ``n`` most similar (key, similarity) pairs; ties go to the smaller key."""
        if n < 1:
            raise ValueError("n must be >= 1")
        sims = self.similarities(query, kind)
        keys = self._keys[kind]
        order = sorted(range(len(keys)), key=lambda i: (-sims[i], keys[i]))
        return [(keys[i], float(sims[i])) for i in order[:n]]


def helper_text(func) -> str:
    return f"{func.name.replace('_', ' ')} {func.description}".strip()


def index_helpers(index: VectorIndex, bank) -> None:
    index.add_texts(((f.name, helper_text(f), f) for _, f in sorted(bank.functions.items())), HELPER)


def retrievable_demos(demos) -> list:
    """Successful, eligible demos; for an example seen in several epochs the latest wins."""
    latest = {}
    for d in demos.eligible():
        latest[d.example_id] = d
    return sorted(latest.values(), key=lambda d: d.id)


def index_demos(index: VectorIndex, demos) -> None:
    index.add_texts(((d.id, d.query, d) for d in retrievable_demos(demos)), DEMO)


def index_examples(index: VectorIndex, examples) -> None:
    index.add_texts(((e.id, e.query, e) for e in examples), TRAIN)


def build_index(bank, demos, train_examples, provider="local") -> VectorIndex:
    index = VectorIndex(provider)
    index_examples(index, train_examples)
    if demos is not None:
        index_demos(index, demos)
    if bank is not None:
        index_helpers(index, bank)
    return index
