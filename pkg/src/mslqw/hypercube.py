"""Hypercube topology: vertex ids as bit strings, adjacency, marked-set sampling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_SAMPLING_ATTEMPTS = 10_000


class InvalidDirectionError(ValueError):
    pass


class SamplingError(RuntimeError):
    """Raised when a non-adjacent marked set cannot be drawn within the attempt cap."""


def _check_vertex(x: int, n: int) -> None:
    if not 0 <= x < (1 << n):
        raise ValueError(f"vertex {x} outside [0, 2^{n})")


def hamming_distance(x: int, y: int) -> int:
    return (int(x) ^ int(y)).bit_count()


def neighbor(x: int, direction: int, n: int) -> int:
    """Vertex reached from ``x`` along edge ``direction`` (flip bit ``direction``)."""
    if not 0 <= direction < n:
        raise InvalidDirectionError(f"direction {direction} not in [0, {n})")
    _check_vertex(x, n)
    return x ^ (1 << direction)


@dataclass(frozen=True)
class MarkedSet:
    """Sorted tuple of distinct marked vertices on the ``n``-cube."""

    n: int
    vertices: tuple[int, ...] = field(default=())

    def __post_init__(self):
        verts = tuple(sorted(int(v) for v in self.vertices))
        if len(set(verts)) != len(verts):
            raise ValueError(f"duplicate vertices in {verts}")
        for v in verts:
            _check_vertex(v, self.n)
        object.__setattr__(self, "vertices", verts)

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    @property
    def k(self) -> int:
        return len(self.vertices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=np.int64)

    def to_json(self) -> dict:
        return {"n": self.n, "vertices": list(self.vertices)}

    @classmethod
    def from_json(cls, obj: dict) -> "MarkedSet":
        return cls(int(obj["n"]), tuple(obj["vertices"]))

    @property
    def key(self) -> str:
        """Stable identifier, e.g. ``"254-1498"``."""
        return "-".join(str(v) for v in self.vertices) or "empty"


def is_mutually_non_adjacent(marked: MarkedSet | Iterable[int]) -> bool:
    verts = list(marked)
    for a in range(len(verts)):
        for b in range(a + 1, len(verts)):
            if hamming_distance(verts[a], verts[b]) < 2:
                return False
    return True


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_non_adjacent_set(n: int, k: int, seed=None,
                            max_attempts: int = MAX_SAMPLING_ATTEMPTS,
                            restart_after: int = 100) -> MarkedSet:
    """Draw ``k`` mutually non-adjacent vertices by rejection sampling.

    Vertices are drawn uniformly one at a time; a draw that repeats or
    neighbours an already accepted vertex is rejected. After ``restart_after``
    consecutive rejections the partial set is discarded and drawing starts
    over, so an early choice that blocks completion (possible on small cubes)
    is not fatal. ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _as_generator(seed)
    N = 1 << n
    chosen: list[int] = []
    attempts = 0
    rejected = 0
    while len(chosen) < k:
        if attempts >= max_attempts:
            raise SamplingError(
                f"could not place {k} non-adjacent vertices on the {n}-cube "
                f"within {max_attempts} draws")
        attempts += 1
        v = int(rng.integers(N))
        if all(hamming_distance(v, u) >= 2 for u in chosen):
            chosen.append(v)
            rejected = 0
        else:
            rejected += 1
            if rejected >= restart_after:
                chosen.clear()
                rejected = 0
    return MarkedSet(n, tuple(chosen))


def parse_marked(text: str | Sequence[int], n: int) -> MarkedSet:
    if isinstance(text, str):
        items = [t for t in text.replace(" ", "").split(",") if t]
        return MarkedSet(n, tuple(int(t, 0) for t in items))
    return MarkedSet(n, tuple(int(t) for t in text))
