"""Immutable directed graph in CSR form, edge-list I/O and generators."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np


class GraphLoadError(ValueError):
    """Raised for malformed edge-list input; message carries the line number."""


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Directed graph with dense node ids ``0..n-1``.

    Both adjacency views are stored as CSR arrays with neighbours sorted
    ascending.  ``ids`` maps a dense id back to the id used in the source file.
    """

    n: int
    out_ptr: np.ndarray
    out_idx: np.ndarray
    in_ptr: np.ndarray
    in_idx: np.ndarray
    ids: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.out_ptr, self.out_idx, self.in_ptr, self.in_idx, self.ids):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], ids=None) -> "DirectedGraph":
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if n < 0:
            raise ValueError("node count must be non-negative")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint outside [0, n)")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise ValueError("self-loops are not allowed")
        keys = arr[:, 0] * max(n, 1) + arr[:, 1]
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate edges are not allowed")
        out_ptr, out_idx = _csr(n, arr[:, 0], arr[:, 1])
        in_ptr, in_idx = _csr(n, arr[:, 1], arr[:, 0])
        if ids is None:
            ids = np.arange(n, dtype=np.int64)
        return cls(n, out_ptr, out_idx, in_ptr, in_idx, np.asarray(ids, dtype=np.int64))

    @property
    def m(self) -> int:
        return int(self.out_idx.size)

    def out_adj(self, u: int) -> np.ndarray:
        return self.out_idx[self.out_ptr[u]:self.out_ptr[u + 1]]

    def in_adj(self, v: int) -> np.ndarray:
        return self.in_idx[self.in_ptr[v]:self.in_ptr[v + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def edges(self) -> np.ndarray:
        """All edges as an ``(m, 2)`` array sorted by (source, target)."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree())
        return np.column_stack([src, self.out_idx])

    def to_edge_list(self, external_ids: bool = False) -> str:
        e = self.edges()
        if external_ids:
            e = self.ids[e]
        buf = io.StringIO()
        buf.write(f"# nodes {self.n} edges {self.m}\n")
        for u, v in e:
            buf.write(f"{u} {v}\n")
        return buf.getvalue()

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return (self.n == other.n
                and np.array_equal(self.out_ptr, other.out_ptr)
                and np.array_equal(self.out_idx, other.out_idx))

    __hash__ = None


def _csr(n, src, dst):
    order = np.lexsort((dst, src))
    counts = np.bincount(src, minlength=n) if src.size else np.zeros(n, dtype=np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, np.ascontiguousarray(dst[order], dtype=np.int64)


def load_edge_list(stream: TextIO | str) -> tuple[DirectedGraph, dict[int, int]]:
    """Parse ``u v`` lines into a graph.

    External ids are remapped to dense ids in ascending order of the external
    id.  Returns the graph and the ``external -> dense`` table.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    pairs = []
    seen = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphLoadError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphLoadError(f"line {lineno}: non-integer node id in {line!r}") from None
        if u == v:
            raise GraphLoadError(f"line {lineno}: self-loop on node {u}")
        if (u, v) in seen:
            raise GraphLoadError(f"line {lineno}: duplicate edge {u} {v} (first on line {seen[u, v]})")
        seen[u, v] = lineno
        pairs.append((u, v))

    ext = sorted({x for p in pairs for x in p})
    remap = {x: i for i, x in enumerate(ext)}
    edges = np.array([(remap[u], remap[v]) for u, v in pairs], dtype=np.int64).reshape(-1, 2)
    return DirectedGraph.from_edges(len(ext), edges, ids=ext), remap


def read_edge_list(path) -> tuple[DirectedGraph, dict[int, int]]:
    with open(path) as fh:
        return load_edge_list(fh)


def gen_grid(rows: int, cols: int) -> DirectedGraph:
    """4-neighbour lattice, every adjacency present in both directions."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    idx = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    horiz = np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])
    vert = np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])
    und = np.vstack([horiz, vert])
    edges = np.vstack([und, und[:, ::-1]])
    return DirectedGraph.from_edges(rows * cols, edges)


def gen_random_graph(n: int, m: int, rng_seed=None) -> DirectedGraph:
    """``m`` distinct non-loop directed edges drawn uniformly without replacement."""
    if n < 0 or m < 0:
        raise ValueError("n and m must be non-negative")
    cap = n * (n - 1)
    if m > cap:
        raise ValueError(f"m={m} exceeds n(n-1)={cap}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    if m == 0:
        return DirectedGraph.from_edges(n, np.empty((0, 2), dtype=np.int64))
    flat = rng.choice(cap, size=m, replace=False)
    u = flat // (n - 1)
    w = flat % (n - 1)
    v = w + (w >= u)
    return DirectedGraph.from_edges(n, np.column_stack([u, v]))
