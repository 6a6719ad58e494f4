"""Truncated reverse-reachable (RR) set sampling and the growing RR pool.

An RR set is rooted at a uniformly random node and holds the infected nodes
that reach the root within ``tau`` steps on one random reverse cascade.  Sets
rooted inside the infected set are *blue*, the others *red*.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numba import njit, prange

from . import _heap
from .cascade import IC, SI, Observation
from .graph import DirectedGraph
from .rng import draw_base, geometric_delay, log1m, next_state, stream_seed, to_open_unit

_CHUNKS = 64
# Upper bound on the dense (sets x |V_I|) staging buffer per kernel call.
_STAGING_CELLS = 1 << 22
# Finite tau up to this many steps uses the bucket queue.
_MAX_BUCKETS = 1 << 16
# Resolution of the inverse-CDF table used by the bucket sampler.
_INV_CELLS = 1 << 12


class Color(enum.Enum):
    BLUE = "blue"
    RED = "red"


@dataclass(frozen=True)
class RRSet:
    src: int
    members: frozenset[int]
    color: Color


# ---------------------------------------------------------------------------
# kernels; each returns (src, member count) and writes members into `out`

@njit(cache=True, inline="always")
def _draw_root(state, n):
    state = next_state(state)
    r = int(to_open_unit(state) * n)
    if r >= n:
        r = n - 1
    return r, state


@njit(cache=True)
def _fast_one(in_ptr, in_idx, n, in_vi, log1mb, tau, state, T, done, touched, heap, out):
    """Reverse Dijkstra on geometric waiting times, binary heap (any tau)."""
    src, state = _draw_root(state, n)
    cnt = 0
    nt = 1
    touched[0] = src
    T[src] = 0.0
    if in_vi[src]:
        out[cnt] = src
        cnt += 1
    hs = _heap.push(heap, 0, np.int64(src))
    while hs > 0:
        key, hs = _heap.pop(heap, hs)
        u = key % n
        d = float(key // n)
        if done[u] or d > T[u]:
            continue
        done[u] = True
        for e in range(in_ptr[u], in_ptr[u + 1]):
            v = in_idx[e]
            if T[v] <= d + 1.0:
                continue
            state = next_state(state)
            nd = d + geometric_delay(to_open_unit(state), log1mb)
            if nd <= tau and nd < T[v]:
                if T[v] == np.inf:
                    touched[nt] = v
                    nt += 1
                    if in_vi[v]:
                        out[cnt] = v
                        cnt += 1
                T[v] = nd
                hs = _heap.push(heap, hs, np.int64(nd) * n + v)
    for i in range(nt):
        T[touched[i]] = np.inf
        done[touched[i]] = False
    return src, cnt


@njit(cache=True)
def _fast_one_buckets(in_ptr, in_idx, n, in_vi, tau, reach, inv, state, T, done, touched,
                      bhead, bnext, bnode, out):
    """Same process with a bucket queue over the integer times ``0..tau``.

    ``reach[k]`` is ``P[wait <= k]``, so a wait is the smallest ``k >= 1`` with
    ``reach[k] >= r``.  ``inv`` gives a lower bound on that ``k`` per table
    cell; draws above ``reach[left]`` cannot arrive in time at all.
    """
    cells = inv.size - 1
    src, state = _draw_root(state, n)
    itau = int(tau)
    cnt = 0
    nt = 1
    touched[0] = src
    T[src] = 0.0
    if in_vi[src]:
        out[cnt] = src
        cnt += 1
    bnode[0] = src
    bnext[0] = -1
    bhead[0] = 0
    used = 1
    for tb in range(itau + 1):
        while bhead[tb] >= 0:
            slot = bhead[tb]
            bhead[tb] = bnext[slot]
            u = bnode[slot]
            if done[u] or T[u] < tb:
                continue
            done[u] = True
            left = itau - tb
            for e in range(in_ptr[u], in_ptr[u + 1]):
                v = in_idx[e]
                if T[v] <= tb + 1:
                    continue
                state = next_state(state)
                r = to_open_unit(state)
                if r > reach[left]:
                    continue
                k = inv[int(r * cells)]
                while reach[k] < r:
                    k += 1
                nd = tb + k
                if nd <= tau and nd < T[v]:
                    if T[v] == np.inf:
                        touched[nt] = v
                        nt += 1
                        if in_vi[v]:
                            out[cnt] = v
                            cnt += 1
                    T[v] = nd
                    ib = int(nd)
                    bnode[used] = v
                    bnext[used] = bhead[ib]
                    bhead[ib] = used
                    used += 1
    for i in range(nt):
        T[touched[i]] = np.inf
        done[touched[i]] = False
    return src, cnt


@njit(cache=True)
def _naive_one(in_ptr, in_idx, n, in_vi, beta, tau, state, infected, newly, reached, out):
    # Literal step-by-step reverse SI: every step re-examines every in-edge of
    # every infected node, as in the textbook description of the process.
    src, state = _draw_root(state, n)
    infected[src] = True
    reached[0] = src
    n_reached = 1
    step = 0
    while step < tau:
        step += 1
        n_new = 0
        has_target = False
        for i in range(n_reached):
            v = reached[i]
            for e in range(in_ptr[v], in_ptr[v + 1]):
                u = in_idx[e]
                if infected[u]:
                    continue
                has_target = True
                state = next_state(state)
                if to_open_unit(state) < beta:
                    infected[u] = True
                    newly[n_new] = u
                    n_new += 1
        if not has_target:
            break
        for i in range(n_new):
            reached[n_reached] = newly[i]
            n_reached += 1
    cnt = 0
    for i in range(n_reached):
        v = reached[i]
        infected[v] = False
        if in_vi[v]:
            out[cnt] = v
            cnt += 1
    return src, cnt


@njit(cache=True)
def _ic_one(in_ptr, in_idx, n, in_vi, p, tau, state, depth, queue, out):
    src, state = _draw_root(state, n)
    cnt = 0
    depth[src] = 0
    queue[0] = src
    head = 0
    tail = 1
    if in_vi[src]:
        out[cnt] = src
        cnt += 1
    while head < tail:
        u = queue[head]
        head += 1
        if depth[u] >= tau:
            continue
        for e in range(in_ptr[u], in_ptr[u + 1]):
            v = in_idx[e]
            if depth[v] >= 0:
                continue
            state = next_state(state)
            if to_open_unit(state) < p:
                depth[v] = depth[u] + 1
                queue[tail] = v
                tail += 1
                if in_vi[v]:
                    out[cnt] = v
                    cnt += 1
    for i in range(tail):
        depth[queue[i]] = -1
    return src, cnt


@njit(cache=True, parallel=True)
def _batch(kind, in_ptr, in_idx, n, in_vi, beta, log1mb, tau, base, first, count, width):
    """Sample sets with ordinals ``first..first+count-1`` into a dense buffer."""
    srcs = np.empty(count, dtype=np.int64)
    sizes = np.empty(count, dtype=np.int64)
    buf = np.empty((count, width), dtype=np.int32)
    use_buckets = tau <= _MAX_BUCKETS
    nb = int(tau) + 1 if use_buckets else 1
    reach = np.ones(nb)
    if use_buckets and log1mb != 0.0:
        for k in range(nb):
            reach[k] = -np.expm1(k * log1mb)
    inv = np.empty(_INV_CELLS + 1, dtype=np.int64)
    k = 1
    for i in range(_INV_CELLS + 1):
        while k < nb - 1 and reach[k] < i / _INV_CELLS:
            k += 1
        inv[i] = k
    nchunks = min(count, _CHUNKS)
    for c in prange(nchunks):
        lo = c * count // nchunks
        hi = (c + 1) * count // nchunks
        out = np.empty(max(width, 1), dtype=np.int64)
        fa = np.full(n, np.inf)
        fb = np.zeros(n, dtype=np.bool_)
        ia = np.empty(n, dtype=np.int64)
        ib = np.empty(in_idx.size + n + 1, dtype=np.int64)
        ic = np.empty(n, dtype=np.int64)
        depth = np.full(n, -1, dtype=np.int64)
        heap = np.empty(in_idx.size + n + 1, dtype=np.int64)
        bhead = np.full(nb, -1, dtype=np.int64)
        bnext = np.empty(in_idx.size + 1, dtype=np.int64)
        for j in range(lo, hi):
            state = stream_seed(base, first + j, 1)
            if kind == 0 and use_buckets:
                s, k = _fast_one_buckets(in_ptr, in_idx, n, in_vi, tau, reach, inv, state, fa, fb, ia,
                                         bhead, bnext, ib, out)
            elif kind == 0:
                s, k = _fast_one(in_ptr, in_idx, n, in_vi, log1mb, tau, state, fa, fb, ia, heap, out)
            elif kind == 1:
                s, k = _naive_one(in_ptr, in_idx, n, in_vi, beta, tau, state, fb, ib, ic, out)
            else:
                s, k = _ic_one(in_ptr, in_idx, n, in_vi, beta, tau, state, depth, ia, out)
            srcs[j] = s
            sizes[j] = k
            for i in range(k):
                buf[j, i] = out[i]
    return srcs, sizes, buf


_KINDS = {"fast": 0, "naive": 1, "ic": 2}


def _sample_block(g: DirectedGraph, obs: Observation, kind: str, base: int, first: int, count: int):
    p = obs.params
    if kind in ("fast", "naive") and p.model != SI:
        raise ValueError(f"{kind} sampler requires SI parameters")
    if kind == "ic" and p.model != IC:
        raise ValueError("ic sampler requires IC parameters")
    width = max(obs.k, 1)
    return _batch(_KINDS[kind], g.in_ptr, g.in_idx, g.n, obs.mask(g.n), p.beta, log1m(p.beta),
                  p.tau_f, np.uint64(base), first, count, width)


def _single(g, obs, rng, kind) -> RRSet:
    srcs, sizes, buf = _sample_block(g, obs, kind, draw_base(rng), 0, 1)
    src = int(srcs[0])
    members = frozenset(int(x) for x in buf[0, :sizes[0]])
    color = Color.BLUE if obs.mask(g.n)[src] else Color.RED
    return RRSet(src, members, color)


def sample_rr_naive(g: DirectedGraph, obs: Observation, rng: np.random.Generator) -> RRSet:
    """Reverse SI played out step by step, then truncated to the infected set."""
    return _single(g, obs, rng, "naive")


def sample_rr_fast(g: DirectedGraph, obs: Observation, rng: np.random.Generator) -> RRSet:
    """Reverse SI via geometric waiting times and a time-ordered priority queue."""
    return _single(g, obs, rng, "fast")


def sample_rr_ic(g: DirectedGraph, obs: Observation, rng: np.random.Generator) -> RRSet:
    return _single(g, obs, rng, "ic")


def default_kind(obs: Observation) -> str:
    return "fast" if obs.params.model == SI else "ic"


# ---------------------------------------------------------------------------
# pool

class RRCollection:
    """Append-only pool of RR sets with an inverted node index.

    Red sets with no members are counted (they matter for the estimator's
    denominator) but not stored.  Stored sets keep generation order.
    """

    def __init__(self, n: int, obs: Observation):
        self.n = n
        self.obs = obs
        self.red_empty = 0
        self.delta = 0
        self._src_chunks: list[np.ndarray] = []
        self._size_chunks: list[np.ndarray] = []
        self._mem_chunks: list[np.ndarray] = []
        self._flat = None
        self._index = None

    @classmethod
    def from_sets(cls, n: int, obs: Observation, sets) -> "RRCollection":
        """Build a pool from explicit ``(src, members)`` pairs, in order."""
        in_vi = obs.mask(n)
        srcs, sizes, flat = [], [], []
        for src, members in sets:
            mem = sorted(int(v) for v in members)
            if any(not in_vi[v] for v in mem):
                raise ValueError(f"RR set rooted at {src} has members outside the infected set")
            if in_vi[src] and src not in mem:
                raise ValueError(f"blue RR set rooted at {src} must contain its root")
            srcs.append(int(src))
            sizes.append(len(mem))
            flat.extend(mem)
        pool = cls(n, obs)
        pool._append(np.array(srcs, dtype=np.int64), np.array(sizes, dtype=np.int64),
                     np.array(flat, dtype=np.int32))
        return pool

    # -- bookkeeping --------------------------------------------------------
    def _append(self, srcs: np.ndarray, sizes: np.ndarray, members: np.ndarray):
        in_vi = self.obs.mask(self.n)
        blue = in_vi[srcs]
        keep = blue | (sizes > 0)
        self.red_empty += int((~keep).sum())
        if sizes.size:
            self.delta = max(self.delta, int(sizes.max()))
        self._src_chunks.append(srcs[keep].astype(np.int32))
        self._size_chunks.append(sizes[keep])
        self._mem_chunks.append(members)
        self._flat = None
        self._index = None

    def _consolidate(self):
        if self._flat is None:
            src = np.concatenate(self._src_chunks) if self._src_chunks else np.empty(0, np.int32)
            sizes = np.concatenate(self._size_chunks) if self._size_chunks else np.empty(0, np.int64)
            members = np.concatenate(self._mem_chunks) if self._mem_chunks else np.empty(0, np.int32)
            offsets = np.zeros(src.size + 1, dtype=np.int64)
            np.cumsum(sizes, out=offsets[1:])
            blue = self.obs.mask(self.n)[src]
            self._src_chunks, self._size_chunks, self._mem_chunks = [src], [sizes], [members]
            self._flat = (src, blue, offsets, members)
        return self._flat

    # -- views ----------------------------------------------------------------
    @property
    def src(self) -> np.ndarray:
        return self._consolidate()[0]

    @property
    def is_blue(self) -> np.ndarray:
        return self._consolidate()[1]

    @property
    def offsets(self) -> np.ndarray:
        return self._consolidate()[2]

    @property
    def members(self) -> np.ndarray:
        return self._consolidate()[3]

    @property
    def stored(self) -> int:
        return int(sum(c.size for c in self._src_chunks))

    @property
    def n_blue(self) -> int:
        return int(self.is_blue.sum())

    @property
    def n_red(self) -> int:
        return self.stored - self.n_blue + self.red_empty

    @property
    def total(self) -> int:
        return self.stored + self.red_empty

    @property
    def memberships(self) -> int:
        return int(sum(c.size for c in self._mem_chunks))

    def node_index(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(ptr, set_ids)``: stored sets containing each node, in set order."""
        if self._index is None:
            src, blue, offsets, members = self._consolidate()
            set_of = np.repeat(np.arange(src.size, dtype=np.int64), np.diff(offsets))
            order = np.argsort(members, kind="stable")
            ptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(np.bincount(members, minlength=self.n), out=ptr[1:])
            self._index = (ptr, set_of[order])
        return self._index

    def __len__(self):
        return self.total

    def __iter__(self) -> Iterator[RRSet]:
        src, blue, offsets, members = self._consolidate()
        for j in range(src.size):
            mem = frozenset(int(x) for x in members[offsets[j]:offsets[j + 1]])
            yield RRSet(int(src[j]), mem, Color.BLUE if blue[j] else Color.RED)

    @property
    def blue(self) -> list[RRSet]:
        return [r for r in self if r.color is Color.BLUE]

    @property
    def red(self) -> list[RRSet]:
        """Stored red sets; the ``red_empty`` memberless ones are not listed."""
        return [r for r in self if r.color is Color.RED]

    def dump(self) -> str:
        lines = [f"# total {self.total} blue {self.n_blue} red {self.n_red} "
                 f"red_empty {self.red_empty} delta {self.delta}"]
        for r in self:
            lines.append(f"{r.color.value} {r.src}: " + " ".join(str(x) for x in sorted(r.members)))
        return "\n".join(lines) + "\n"


def batch_sample(g: DirectedGraph, obs: Observation, count: int, rng: np.random.Generator,
                 collection: RRCollection | None = None, kind: str | None = None) -> RRCollection:
    """Append ``count`` fresh RR sets to ``collection`` (a new one if None)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if collection is None:
        collection = RRCollection(g.n, obs)
    kind = kind or default_kind(obs)
    base = draw_base(rng)
    width = max(obs.k, 1)
    step = max(1, _STAGING_CELLS // width)
    for first in range(0, count, step):
        c = min(step, count - first)
        srcs, sizes, buf = _sample_block(g, obs, kind, base, first, c)
        mask = np.arange(width)[None, :] < sizes[:, None]
        collection._append(srcs, sizes, buf[mask])
    return collection
