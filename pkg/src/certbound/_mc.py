"""Monte-Carlo plumbing: deterministic sub-streams, chunked maps, streaming moments.

The sample budget of every MC routine is cut into fixed-size chunks. Each chunk
draws from its own child generator spawned from the caller's generator, so the
result depends only on (seed, n_samples) and never on the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

CHUNK_SIZE = 1 << 14
THREADS_ENV = "CERTBOUND_THREADS"

T = TypeVar("T")


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or an integer seed; anything else is rejected."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng))
    raise TypeError(f"expected numpy Generator or int seed, got {type(rng).__name__}")


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def chunk_sizes(n_samples: int, chunk_size: int = CHUNK_SIZE) -> list[int]:
    n_full, rest = divmod(int(n_samples), chunk_size)
    return [chunk_size] * n_full + ([rest] if rest else [])


def spawn(rng, n: int) -> list[np.random.Generator]:
    return as_generator(rng).spawn(n)


def map_ordered(fn: Callable[..., T], tasks: Sequence[tuple], threads: int | None = None) -> list[T]:
    """Apply ``fn(*task)`` to every task, returning results in task order."""
    threads = resolve_threads(threads)
    if threads == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=min(threads, len(tasks))) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def map_chunks(fn: Callable[[np.random.Generator, int], T], n_samples: int, rng,
               threads: int | None = None, chunk_size: int = CHUNK_SIZE) -> list[T]:
    """Run ``fn(child_rng, count)`` over the chunk policy for ``n_samples``."""
    sizes = chunk_sizes(n_samples, chunk_size)
    children = spawn(rng, len(sizes))
    return map_ordered(fn, list(zip(children, sizes)), threads)


@dataclass(frozen=True)
class Moments:
    """Count, mean and centered sum of squares of a sample (Chan et al. merge)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return cls()
        mean = float(values.mean())
        return cls(values.size, mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: "Moments") -> "Moments":
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Moments(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count > 0 else 0.0


def merge_all(parts: Sequence[Moments]) -> Moments:
    total = Moments()
    for p in parts:
        total = total.merge(p)
    return total
