"""Query embeddings.

The ``local`` provider hashes character 3-grams into 256 buckets and
L2-normalizes; it is deterministic and needs no network. The ``remote``
provider calls an OpenAI-style ``/embeddings`` endpoint.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

import httpx
import numpy as np

LOCAL_DIM = 256
NGRAM = 3


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple
    provider: str

    def __post_init__(self):
        if not self.values or not any(self.values):
            raise EmbeddingError("zero vectors cannot be embedded in an index")

    @property
    def dim(self) -> int:
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _bucket(gram: str) -> tuple[int, float]:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    h = int.from_bytes(digest, "little")
    return h % LOCAL_DIM, (1.0 if (h >> 63) & 1 == 0 else -1.0)


def local_embed(text: str) -> EmbeddingVector:
    if not text or not text.strip():
        raise EmbeddingError("cannot embed empty text")
    padded = f" {' '.join(text.lower().split())} "
    vec = np.zeros(LOCAL_DIM)
    for i in range(len(padded) - NGRAM + 1):
        idx, sign = _bucket(padded[i:i + NGRAM])
        vec[idx] += sign
    norm = np.linalg.norm(vec)
    if norm == 0:  # every gram cancelled out; fall back to unsigned counts
        for i in range(len(padded) - NGRAM + 1):
            vec[_bucket(padded[i:i + NGRAM])[0]] += 1.0
        norm = np.linalg.norm(vec)
    return EmbeddingVector(tuple(float(v) for v in vec / norm), "local")


class RemoteEmbedder:
    """OpenAI-style embedding client; vectors are L2-normalized on arrival."""

    def __init__(self, base_url: str, api_key: str | None = None, model: str = "text-embedding-ada-002",
                 transport: httpx.BaseTransport | None = None, timeout: float = 60.0):
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self.client = httpx.Client(base_url=base_url.rstrip("/"), headers=headers,
                                   transport=transport, timeout=timeout)
        self.model = model

    @classmethod
    def from_env(cls, **kw) -> "RemoteEmbedder":
        base = os.environ.get("LIBFORGE_API_BASE")
        if not base:
            raise EmbeddingError("set LIBFORGE_API_BASE to use the remote embedding provider")
        return cls(base, os.environ.get("LIBFORGE_API_KEY"), **kw)

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        for t in texts:
            if not t or not t.strip():
                raise EmbeddingError("cannot embed empty text")
        try:
            resp = self.client.post("/embeddings", json={"model": self.model, "input": list(texts)})
        except httpx.TransportError as err:
            raise EmbeddingError(f"embedding request failed: {err}") from err
        if not resp.is_success:
            raise EmbeddingError(f"embedding request failed: HTTP {resp.status_code}")
        rows = sorted(resp.json()["data"], key=lambda r: r["index"])
        out = []
        for row in rows:
            v = np.asarray(row["embedding"], dtype=float)
            norm = np.linalg.norm(v)
            if norm == 0:
                raise EmbeddingError("remote provider returned a zero vector")
            out.append(EmbeddingVector(tuple(float(x) for x in v / norm), "remote"))
        return out


def embed_texts(texts, provider="local") -> list[EmbeddingVector]:
    """Embed ``texts`` with ``"local"``, ``"remote"`` or a provider object."""
    texts = list(texts)
    if provider == "local":
        vecs = [local_embed(t) for t in texts]
    elif provider == "remote":
        vecs = RemoteEmbedder.from_env().embed(texts)
    elif hasattr(provider, "embed"):
        vecs = provider.embed(texts)
    else:
        raise EmbeddingError(f"unknown embedding provider {provider!r}")
    if len({v.dim for v in vecs}) > 1:
        raise EmbeddingError("embedding provider returned vectors of mixed dimension")
    return vecs


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    x, y = a.array(), b.array()
    return float(x @ y / (np.linalg.norm(x) * np.linalg.norm(y)))
