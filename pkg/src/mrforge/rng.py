"""Seeded, splittable randomness.

Every random decision in mrforge goes through a :class:`SeededRng`. The
generator is numpy's PCG64, whose output stream is identical on every
platform for a given seed. Child generators are derived by hashing the parent
seed together with a key (``fork``), never by consuming the parent's stream,
so independent parts of a run stay reproducible on their own.

"""

import hashlib
from typing import Any, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

SEED_MASK = 2**64 - 1


def derive_seed(*parts: Any) -> int:
    """Hash arbitrary parts into a 64-bit unsigned seed."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def hash_unit(*parts: Any) -> float:
    """Deterministic value in [0, 1) for the given parts."""
    return derive_seed(*parts) / 2**64


class SeededRng:
    def __init__(self, seed: int):
        self.seed = int(seed) & SEED_MASK
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def __repr__(self):
        return f"SeededRng({self.seed})"

    def fork(self, *keys: Any) -> "SeededRng":
        return SeededRng(derive_seed(self.seed, *keys))

    def random(self) -> float:
        return float(self._gen.random())

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in ``[low, high)``."""
        return int(self._gen.integers(low, high))

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise IndexError("cannot choose from an empty sequence")
        return seq[self.integers(0, len(seq))]

    def weighted_index(self, weights: Sequence[float]) -> int:
        p = np.asarray(weights, dtype=float)
        total = p.sum()
        if total <= 0:
            raise ValueError("weights must have a positive sum")
        return int(self._gen.choice(len(p), p=p / total))

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        """``k`` elements without replacement, in draw order."""
        idx = self._gen.choice(len(seq), size=k, replace=False)
        return [seq[int(i)] for i in idx]

    def subset(self, seq: Sequence[T], k: int) -> list[T]:
        """``k`` elements without replacement, in their original order."""
        idx = self._gen.choice(len(seq), size=k, replace=False)
        return [seq[i] for i in sorted(int(i) for i in idx)]

    def shuffled(self, seq: Sequence[T]) -> list[T]:
        return [seq[int(i)] for i in self._gen.permutation(len(seq))]
