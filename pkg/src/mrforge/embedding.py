"""Text embeddings for perturbation quality and output similarity."""

import functools
import re
import zlib
from typing import Protocol

import numpy as np

from .errors import DegenerateEmbedding

_SPACE_RE = re.compile(r"\s+")


class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class TrigramEmbedder:
    """Hashed character-trigram frequency vectors, L2-normalized."""

    def __init__(self, dimension: int = 512):
        self.dimension = dimension
        self._embed = functools.lru_cache(maxsize=2**16)(self._compute)

    def embed(self, text: str) -> np.ndarray:
        return self._embed(text)

    def _compute(self, text: str) -> np.ndarray:
        padded = "  " + _SPACE_RE.sub(" ", text.lower()).strip() + " "
        buckets = [
            zlib.crc32(padded[i : i + 3].encode("utf-8")) % self.dimension
            for i in range(len(padded) - 2)
        ]
        vec = np.bincount(buckets, minlength=self.dimension).astype(float)
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        vec.setflags(write=False)
        return vec


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DegenerateEmbedding("cannot compare a zero-norm embedding")
    return float(np.dot(u, v) / (nu * nv))
