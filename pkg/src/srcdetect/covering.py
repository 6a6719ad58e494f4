"""Submodular-cost covering over an RR pool and greedy post-optimisation.

Every blue set must be covered, either by a selected node (``x_u = 1``) or
by paying its slack variable ``y_j``; every red set costs the largest ``x`` of
its members.  One primal-dual pass over the blue sets raises the variables of
each set by the cheapest amount that satisfies it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

from .estimator import hit_sets
from .sampling import RRCollection

log = logging.getLogger(__name__)

SELECT_TOL = 1e-9


@dataclass
class SolverState:
    x: np.ndarray          # per node; only infected nodes are ever raised
    y: np.ndarray          # per stored set; meaningful for blue sets
    red_cost: np.ndarray   # per stored set; max member x for red sets
    clamped: int           # how many updates had to be clipped to 1
    max_raise: float       # largest x or y seen during the pass


def red_index(collection: RRCollection) -> tuple[np.ndarray, np.ndarray]:
    """CSR of red set ids containing each node."""
    ptr, ids = collection.node_index()
    red = ~collection.is_blue[ids]
    node_of = np.repeat(np.arange(collection.n, dtype=np.int64), np.diff(ptr))
    counts = np.bincount(node_of[red], minlength=collection.n)
    rptr = np.zeros(collection.n + 1, dtype=np.int64)
    np.cumsum(counts, out=rptr[1:])
    return rptr, ids[red]


@njit(cache=True)
def _primal_dual(n, is_blue, offsets, members, rptr, rids):
    nsets = is_blue.size
    x = np.zeros(n)
    y = np.zeros(nsets)
    cache = np.zeros(nsets)
    width = 1
    for j in range(nsets):
        width = max(width, offsets[j + 1] - offsets[j])
    sums = np.empty(width)
    clamped = 0
    peak = 0.0
    for j in range(nsets):
        if not is_blue[j]:
            continue
        lo = offsets[j]
        hi = offsets[j + 1]
        theta = 1.0 - y[j]
        # all candidate raises are priced against the state before this step
        for i in range(lo, hi):
            u = members[i]
            r = rptr[u + 1] - rptr[u]
            if x[u] >= 1.0:
                # every red set of u already costs 1
                sums[i - lo] = r
                theta = 0.0
                continue
            s = 0.0
            for k in range(rptr[u], rptr[u + 1]):
                s += cache[rids[k]]
            sums[i - lo] = s
            if r - s < theta:
                theta = r - s
        if theta < 0.0:
            theta = 0.0
        for i in range(lo, hi):
            u = members[i]
            if x[u] >= 1.0:
                continue
            r = rptr[u + 1] - rptr[u]
            if r == 0:
                xn = 1.0
            else:
                xn = (theta + sums[i - lo]) / r
            if xn > 1.0:
                if xn > 1.0 + 1e-9:
                    clamped += 1
                xn = 1.0
            if xn > peak:
                peak = xn
            if xn > x[u]:
                x[u] = xn
                for k in range(rptr[u], rptr[u + 1]):
                    t = rids[k]
                    if cache[t] < xn:
                        cache[t] = xn
        y[j] += theta
        if y[j] > peak:
            peak = y[j]
    return x, y, cache, clamped, peak


def solve_covering(collection: RRCollection) -> SolverState:
    if collection.n_blue == 0:
        raise ValueError("no blue RR sets: the covering instance has no constraints")
    rptr, rids = red_index(collection)
    x, y, cache, clamped, peak = _primal_dual(collection.n, collection.is_blue, collection.offsets,
                                              collection.members.astype(np.int64), rptr, rids)
    if clamped:
        log.warning("covering pass clipped %d variable updates to 1", clamped)
    return SolverState(x, y, cache, int(clamped), float(peak))


def best_single_node(collection: RRCollection) -> int:
    """Infected node maximising (blue sets hit) - (red sets hit); ties to the smaller id."""
    ptr, ids = collection.node_index()
    blue = collection.is_blue[ids].astype(np.int64)
    node_of = np.repeat(np.arange(collection.n, dtype=np.int64), np.diff(ptr))
    score = np.bincount(node_of, weights=2 * blue - 1, minlength=collection.n)
    cand = collection.obs.infected
    return int(cand[np.argmax(score[cand])])


def select_sources(collection: RRCollection, state: SolverState | None = None) -> tuple[frozenset[int], bool]:
    """Run the covering pass and return ``(selected nodes, fallback_used)``.

    Nodes whose ``x`` reached 1 are selected.  If none did, the single best
    node by blue-minus-red hits is returned instead and the flag is set.
    """
    chosen = solve_delta_approx(collection, state)
    if not chosen:
        node = best_single_node(collection)
        log.info("covering pass selected nothing; falling back to node %d", node)
        return frozenset([node]), True
    return chosen, False


def solve_delta_approx(collection: RRCollection, state: SolverState | None = None) -> frozenset[int]:
    """Nodes whose covering variable reached 1; may be empty."""
    state = state or solve_covering(collection)
    return frozenset(np.flatnonzero(state.x >= 1.0 - SELECT_TOL).tolist())


def post_optimize(S, collection: RRCollection, n: int | None = None, keep_nonempty: bool = True) -> frozenset[int]:
    """Drop nodes one at a time while the sampled objective does not go up.

    Each round removes the node with the largest strict decrease (smallest id
    on ties).  Once no removal helps, nodes whose removal leaves the objective
    unchanged are dropped too, the one in the fewest sets first, so redundant
    members of a tied optimum do not survive.  With ``keep_nonempty`` the last
    node is never removed; otherwise it goes only on a strict decrease.
    """
    S = sorted(int(u) for u in S)
    if not S:
        raise ValueError("post_optimize needs a non-empty set")
    ptr, ids = collection.node_index()
    is_blue = collection.is_blue
    count = np.zeros(collection.stored, dtype=np.int64)
    for u in S:
        count[ids[ptr[u]:ptr[u + 1]]] += 1
    current = set(S)
    while len(current) > (1 if keep_nonempty else 0):
        best_gain, best_u = 0, -1
        tie_u, tie_size = -1, 0
        for u in sorted(current):
            sets = ids[ptr[u]:ptr[u + 1]]
            sole = sets[count[sets] == 1]
            # removing u uncovers the sets it alone covers
            gain = int(np.count_nonzero(~is_blue[sole])) - int(np.count_nonzero(is_blue[sole]))
            if gain > best_gain:
                best_gain, best_u = gain, u
            elif gain == 0 and (tie_u < 0 or sets.size < tie_size):
                tie_u, tie_size = u, sets.size
        if best_u < 0:
            if tie_u < 0 or len(current) == 1:
                break
            best_u = tie_u
        current.remove(best_u)
        count[ids[ptr[best_u]:ptr[best_u + 1]]] -= 1
    return frozenset(current)


def sampled_cost(collection: RRCollection, S) -> int:
    """Uncovered blue plus covered red, counted on the pool."""
    hit = hit_sets(collection, S)
    blue = collection.is_blue
    return int(collection.n_blue - np.count_nonzero(hit & blue) + np.count_nonzero(hit & ~blue))
