"""Coverage counts and symmetric-difference estimates over an RR pool."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import RRCollection


@dataclass(frozen=True)
class CoverageCounts:
    uncovered_blue: int
    covered_red: int
    total: int

    @property
    def cost(self) -> int:
        return self.uncovered_blue + self.covered_red


def _nodes(S) -> np.ndarray:
    if isinstance(S, np.ndarray):
        return np.unique(S.astype(np.int64))
    return np.array(sorted(int(x) for x in S), dtype=np.int64)


def hit_sets(collection: RRCollection, S) -> np.ndarray:
    """Boolean mask over stored sets: which sets intersect ``S``."""
    ptr, ids = collection.node_index()
    hit = np.zeros(collection.stored, dtype=np.bool_)
    for u in _nodes(S):
        hit[ids[ptr[u]:ptr[u + 1]]] = True
    return hit


def coverage(collection: RRCollection, S) -> CoverageCounts:
    S = _nodes(S)
    in_vi = collection.obs.mask(collection.n)
    if S.size and (S[0] < 0 or S[-1] >= collection.n or not in_vi[S].all()):
        raise ValueError("candidate set must be a subset of the infected nodes")
    hit = hit_sets(collection, S)
    blue = collection.is_blue
    covered_blue = int(np.count_nonzero(hit & blue))
    return CoverageCounts(collection.n_blue - covered_blue, int(np.count_nonzero(hit & ~blue)),
                          collection.total)


def estimate_sd(collection: RRCollection, S, n: int | None = None) -> float:
    """``n * (uncovered blue + covered red) / |R|``."""
    if collection.total < 1:
        raise ValueError("empty RR collection")
    n = collection.n if n is None else n
    c = coverage(collection, S)
    return n * c.cost / c.total
