"""Reference detectors: forward-Monte-Carlo Greedy and Max-Degree.

Both score candidate sets with the delay-engine forward simulation, using one
fixed block of trials for the whole run so every candidate is compared on the
same random cascades.
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange

from . import _heap
from .cascade import Observation, edge_delay
from .graph import DirectedGraph
from .rng import draw_base, log1m


@njit(cache=True)
def _grow(out_ptr, out_idx, n, u, in_vi, is_si, log1mb, p, tau, base, trial,
          dist_s, local, touched, heap, write):
    """Add source ``u`` on one trial; return the change in symmetric difference.

    Only nodes that ``u`` reaches strictly before the current sources are
    explored.  With ``write`` the merged times are stored into ``dist_s``.
    """
    delta = 0
    nt = 1
    touched[0] = u
    local[u] = 0.0
    hs = _heap.push(heap, 0, np.int64(u))
    while hs > 0:
        key, hs = _heap.pop(heap, hs)
        v = key % n
        d = float(key // n)
        if d > local[v]:
            continue
        if dist_s[v] == np.inf:
            delta += -1 if in_vi[v] else 1
        if write:
            dist_s[v] = d
        for e in range(out_ptr[v], out_ptr[v + 1]):
            w = out_idx[e]
            if local[w] <= d + 1.0 or dist_s[w] <= d + 1.0:
                continue
            nd = d + edge_delay(base, trial, e, is_si, log1mb, p)
            if nd <= tau and nd < local[w] and nd < dist_s[w]:
                if local[w] == np.inf:
                    touched[nt] = w
                    nt += 1
                local[w] = nd
                hs = _heap.push(heap, hs, np.int64(nd) * n + w)
    for i in range(nt):
        local[touched[i]] = np.inf
    return delta


@njit(cache=True, parallel=True)
def _marginals(out_ptr, out_idx, n, cands, in_vi, is_si, log1mb, p, tau, base, dist_s):
    trials = dist_s.shape[0]
    res = np.zeros(cands.size, dtype=np.int64)
    for c in prange(cands.size):
        local = np.full(n, np.inf)
        touched = np.empty(n, dtype=np.int64)
        heap = np.empty(out_idx.size + n + 1, dtype=np.int64)
        tot = 0
        for t in range(trials):
            tot += _grow(out_ptr, out_idx, n, cands[c], in_vi, is_si, log1mb, p, tau, base, t,
                         dist_s[t], local, touched, heap, False)
        res[c] = tot
    return res


@njit(cache=True, parallel=True)
def _apply(out_ptr, out_idx, n, u, in_vi, is_si, log1mb, p, tau, base, dist_s):
    trials = dist_s.shape[0]
    out = np.zeros(trials, dtype=np.int64)
    for t in prange(trials):
        local = np.full(n, np.inf)
        touched = np.empty(n, dtype=np.int64)
        heap = np.empty(out_idx.size + n + 1, dtype=np.int64)
        out[t] = _grow(out_ptr, out_idx, n, u, in_vi, is_si, log1mb, p, tau, base, t,
                       dist_s[t], local, touched, heap, True)
    return out


class _Evaluator:
    """Sum over a fixed trial block of the symmetric difference of a growing set."""

    def __init__(self, g: DirectedGraph, obs: Observation, trials: int, base: int):
        self.g, self.obs, self.trials = g, obs, trials
        p = obs.params
        self.args = (obs.mask(g.n), p.is_si, log1m(p.beta), p.beta, p.tau_f, np.uint64(base))
        self.dist = np.full((trials, g.n), np.inf)
        self.total = trials * obs.k  # empty set misses every infected node

    def marginals(self, cands: np.ndarray) -> np.ndarray:
        g = self.g
        return _marginals(g.out_ptr, g.out_idx, g.n, cands, *self.args, self.dist)

    def add(self, u: int) -> None:
        g = self.g
        self.total += int(_apply(g.out_ptr, g.out_idx, g.n, u, *self.args, self.dist).sum())

    @property
    def mean(self) -> float:
        return self.total / self.trials


def _check(obs: Observation, trials: int):
    if obs.k == 0:
        raise ValueError("observation has no infected nodes")
    if trials < 1:
        raise ValueError("trials_per_eval must be >= 1")


def greedy_detect(g: DirectedGraph, obs: Observation, trials_per_eval: int = 200,
                  rng: np.random.Generator | None = None, return_trace: bool = False):
    """Add the infected node with the largest estimated decrease until none decreases.

    The first node is always taken so the result is never empty.  With
    ``return_trace`` also returns the estimated objective after each addition.
    """
    _check(obs, trials_per_eval)
    rng = rng if rng is not None else np.random.default_rng()
    ev = _Evaluator(g, obs, trials_per_eval, draw_base(rng))
    chosen: list[int] = []
    trace = [ev.mean]
    remaining = obs.infected.copy()
    while remaining.size:
        gains = ev.marginals(remaining)
        i = int(np.argmin(gains))
        if gains[i] >= 0 and chosen:
            break
        u = int(remaining[i])
        ev.add(u)
        chosen.append(u)
        trace.append(ev.mean)
        remaining = np.delete(remaining, i)
    result = frozenset(chosen)
    return (result, trace) if return_trace else result


def degree_order(g: DirectedGraph, obs: Observation) -> np.ndarray:
    deg = g.out_degree() + g.in_degree()
    nodes = obs.infected
    return nodes[np.lexsort((nodes, -deg[nodes]))]


def max_degree_detect(g: DirectedGraph, obs: Observation, trials_per_eval: int = 200,
                      rng: np.random.Generator | None = None) -> frozenset[int]:
    """Take infected nodes by descending total degree until one raises the estimate."""
    _check(obs, trials_per_eval)
    rng = rng if rng is not None else np.random.default_rng()
    ev = _Evaluator(g, obs, trials_per_eval, draw_base(rng))
    order = degree_order(g, obs)
    chosen = [int(order[0])]
    ev.add(chosen[0])
    for u in order[1:]:
        if ev.marginals(np.array([u], dtype=np.int64))[0] > 0:
            break
        ev.add(int(u))
        chosen.append(int(u))
    return frozenset(chosen)
