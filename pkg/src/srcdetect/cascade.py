"""Forward SI / IC cascades, symmetric difference and test-case generation.

Two simulation engines exist.  The *step* engine plays the process out one
discrete step at a time with a fresh Bernoulli trial per live edge, exactly as
the model is defined.  The *delay* engine draws, for every edge, the number of
steps the tail needs to infect the head (geometric for SI, 1-or-never for IC)
from a stateless hash of ``(base, trial, edge)``; a cascade is then the set of
nodes within shortest-path time ``tau`` of the sources.  Both have the same
distribution, and the delay engine gives exact common random numbers across
different source sets evaluated on the same trial index.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np
from numba import njit, prange

from .graph import DirectedGraph
from .rng import draw_base, geometric_delay, hash_unit, log1m, next_state, stream_seed, to_open_unit

SI = "SI"
IC = "IC"
INF = math.inf

# Work is split into a fixed number of chunks so results never depend on the
# number of threads.
_CHUNKS = 64


@dataclass(frozen=True)
class ModelParams:
    model: str
    beta: float
    tau: float = INF

    def __post_init__(self):
        model = self.model.upper()
        if model not in (SI, IC):
            raise ValueError(f"unknown model {self.model!r}")
        object.__setattr__(self, "model", model)
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.tau != INF:
            if self.tau < 1 or int(self.tau) != self.tau:
                raise ValueError(f"tau must be a positive integer or inf, got {self.tau}")
            object.__setattr__(self, "tau", int(self.tau))

    @property
    def tau_f(self) -> float:
        return float(self.tau)

    @property
    def is_si(self) -> bool:
        return self.model == SI


@dataclass(frozen=True, eq=False)
class Observation:
    """Observed infected set plus the cascade parameters that produced it."""

    infected: np.ndarray
    params: ModelParams
    true_sources: np.ndarray | None = None
    _mask_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        inf = np.unique(np.asarray(self.infected, dtype=np.int64))
        object.__setattr__(self, "infected", inf)
        if self.true_sources is not None:
            ts = np.unique(np.asarray(self.true_sources, dtype=np.int64))
            if not np.isin(ts, inf).all():
                raise ValueError("true sources must be a subset of the infected set")
            object.__setattr__(self, "true_sources", ts)

    @property
    def k(self) -> int:
        return int(self.infected.size)

    def mask(self, n: int) -> np.ndarray:
        if n not in self._mask_cache:
            if self.infected.size and self.infected[-1] >= n:
                raise ValueError("infected node outside the graph")
            m = np.zeros(n, dtype=np.bool_)
            m[self.infected] = True
            self._mask_cache[n] = m
        return self._mask_cache[n]

    def __eq__(self, other):
        if not isinstance(other, Observation):
            return NotImplemented
        ts_eq = (self.true_sources is None and other.true_sources is None) or (
            self.true_sources is not None and other.true_sources is not None
            and np.array_equal(self.true_sources, other.true_sources))
        return np.array_equal(self.infected, other.infected) and self.params == other.params and ts_eq


def _as_nodes(nodes, n: int | None = None) -> np.ndarray:
    arr = np.unique(np.fromiter((int(x) for x in nodes), dtype=np.int64)) if not isinstance(nodes, np.ndarray) \
        else np.unique(nodes.astype(np.int64))
    if n is not None and arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise ValueError("node id outside [0, n)")
    return arr


# ---------------------------------------------------------------------------
# step engine

@njit(cache=True)
def _step_cascade(out_ptr, out_idx, n, sources, is_si, beta, tau, state):
    """One synchronous forward run; returns (infected mask, advanced state)."""
    infected = np.zeros(n, dtype=np.bool_)
    fresh = np.empty(n, dtype=np.int64)   # infected in the previous step (IC attempts)
    active = np.empty(n, dtype=np.int64)  # SI spreaders that may still have targets
    n_fresh = 0
    n_active = 0
    for s in sources:
        if not infected[s]:
            infected[s] = True
            fresh[n_fresh] = s
            n_fresh += 1
            active[n_active] = s
            n_active += 1
    newly = np.empty(n, dtype=np.int64)
    step = 0
    while step < tau:
        step += 1
        n_new = 0
        if is_si:
            keep = 0
            for i in range(n_active):
                u = active[i]
                has_target = False
                for e in range(out_ptr[u], out_ptr[u + 1]):
                    v = out_idx[e]
                    if infected[v]:
                        continue
                    has_target = True
                    state = next_state(state)
                    if to_open_unit(state) < beta:
                        infected[v] = True
                        newly[n_new] = v
                        n_new += 1
                if has_target:
                    active[keep] = u
                    keep += 1
            # nodes infected during this step start spreading next step
            for i in range(n_new):
                active[keep] = newly[i]
                keep += 1
            n_active = keep
            if n_active == 0:
                break
        else:
            for i in range(n_fresh):
                u = fresh[i]
                for e in range(out_ptr[u], out_ptr[u + 1]):
                    v = out_idx[e]
                    if infected[v]:
                        continue
                    state = next_state(state)
                    if to_open_unit(state) < beta:
                        infected[v] = True
                        newly[n_new] = v
                        n_new += 1
            for i in range(n_new):
                fresh[i] = newly[i]
            n_fresh = n_new
            if n_fresh == 0:
                break
    return infected, state


@njit(cache=True, parallel=True)
def _step_counts(out_ptr, out_idx, n, sources, in_vi, is_si, beta, tau, base, trials):
    hits = np.zeros(trials, dtype=np.int64)
    size = np.zeros(trials, dtype=np.int64)
    nchunks = min(trials, _CHUNKS)
    for c in prange(nchunks):
        lo = c * trials // nchunks
        hi = (c + 1) * trials // nchunks
        for t in range(lo, hi):
            state = stream_seed(base, t, 0)
            inf, _ = _step_cascade(out_ptr, out_idx, n, sources, is_si, beta, tau, state)
            h = 0
            s = 0
            for v in range(n):
                if inf[v]:
                    s += 1
                    if in_vi[v]:
                        h += 1
            hits[t] = h
            size[t] = s
    return hits, size


# ---------------------------------------------------------------------------
# delay engine

@njit(cache=True, inline="always")
def edge_delay(base, trial, eid, is_si, log1mb, p):
    r = hash_unit(base, trial, eid)
    if is_si:
        return geometric_delay(r, log1mb)
    return 1.0 if r < p else np.inf


@njit(cache=True)
def _delay_times(out_ptr, out_idx, sources, is_si, log1mb, p, tau, base, trial,
                 dist, touched, n_touched):
    """Dijkstra over hashed edge delays; writes dist for nodes with time <= tau.

    ``dist`` must be +inf everywhere on entry except at previously touched
    nodes, which the caller resets via ``touched``.  Returns the new touched
    count.  Nodes are finalised in (time, id) order.
    """
    heap = [(0.0, np.int64(0))]
    heap.pop()
    for s in sources:
        if dist[s] > 0.0:
            if dist[s] == np.inf:
                touched[n_touched] = s
                n_touched += 1
            dist[s] = 0.0
            heapq.heappush(heap, (0.0, np.int64(s)))
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for e in range(out_ptr[u], out_ptr[u + 1]):
            v = out_idx[e]
            if dist[v] <= d:
                continue
            nd = d + edge_delay(base, trial, e, is_si, log1mb, p)
            if nd <= tau and nd < dist[v]:
                if dist[v] == np.inf:
                    touched[n_touched] = v
                    n_touched += 1
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return n_touched


@njit(cache=True, parallel=True)
def _delay_counts(out_ptr, out_idx, n, sources, in_vi, is_si, log1mb, p, tau, base, trials):
    hits = np.zeros(trials, dtype=np.int64)
    size = np.zeros(trials, dtype=np.int64)
    nchunks = min(trials, _CHUNKS)
    for c in prange(nchunks):
        lo = c * trials // nchunks
        hi = (c + 1) * trials // nchunks
        dist = np.full(n, np.inf)
        touched = np.empty(n, dtype=np.int64)
        for t in range(lo, hi):
            nt = _delay_times(out_ptr, out_idx, sources, is_si, log1mb, p, tau, base, t, dist, touched, 0)
            h = 0
            for i in range(nt):
                if in_vi[touched[i]]:
                    h += 1
                dist[touched[i]] = np.inf
            hits[t] = h
            size[t] = nt
    return hits, size


@njit(cache=True)
def _delay_single(out_ptr, out_idx, n, sources, is_si, log1mb, p, tau, base):
    dist = np.full(n, np.inf)
    touched = np.empty(n, dtype=np.int64)
    _delay_times(out_ptr, out_idx, sources, is_si, log1mb, p, tau, base, 0, dist, touched, 0)
    return dist


# ---------------------------------------------------------------------------
# public API

def _check_sources(g: DirectedGraph, sources) -> np.ndarray:
    src = _as_nodes(sources, g.n)
    if src.size == 0:
        raise ValueError("source set must be non-empty")
    return src


def _simulate(g, sources, params, rng, model):
    if params.model != model:
        raise ValueError(f"expected {model} parameters, got {params.model}")
    src = _check_sources(g, sources)
    state = np.uint64(draw_base(rng))
    tau = params.tau_f if params.tau != INF else np.inf
    inf, _ = _step_cascade(g.out_ptr, g.out_idx, g.n, src, params.is_si, params.beta, tau, state)
    return frozenset(np.flatnonzero(inf).tolist())


def simulate_si(g: DirectedGraph, sources, params: ModelParams, rng: np.random.Generator) -> frozenset[int]:
    """Run the SI process step by step for ``tau`` steps (to fixpoint if inf)."""
    return _simulate(g, sources, params, rng, SI)


def simulate_ic(g: DirectedGraph, sources, params: ModelParams, rng: np.random.Generator) -> frozenset[int]:
    """Run the IC process: one attempt per out-edge of each newly infected node."""
    return _simulate(g, sources, params, rng, IC)


def simulate(g, sources, params, rng):
    return _simulate(g, sources, params, rng, params.model)


def symmetric_difference(cascade: Iterable[int], infected: Iterable[int]) -> int:
    cascade, infected = set(cascade), set(infected)
    return len(infected - cascade) + len(cascade - infected)


def forward_counts(g: DirectedGraph, sources, obs: Observation, trials: int, base: int,
                   engine: str = "delay") -> tuple[np.ndarray, np.ndarray]:
    """Per-trial ``(|V(S) & V_I|, |V(S)|)`` for ``trials`` forward cascades.

    Trial ``t`` depends only on ``(base, t)``; the delay engine additionally
    shares edge randomness across different source sets.
    """
    src = _check_sources(g, sources)
    p = obs.params
    tau = p.tau_f
    in_vi = obs.mask(g.n)
    if engine == "delay":
        return _delay_counts(g.out_ptr, g.out_idx, g.n, src, in_vi, p.is_si, log1m(p.beta), p.beta,
                             tau, np.uint64(base), trials)
    if engine == "step":
        return _step_counts(g.out_ptr, g.out_idx, g.n, src, in_vi, p.is_si, p.beta, tau,
                            np.uint64(base), trials)
    raise ValueError(f"unknown engine {engine!r}")


def estimate_sd_forward(g: DirectedGraph, S, obs: Observation, trials: int, rng: np.random.Generator,
                        engine: str = "step") -> tuple[float, float]:
    """Monte-Carlo mean and standard error of the symmetric difference of ``S``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits, size = forward_counts(g, S, obs, trials, draw_base(rng), engine)
    d = (obs.k - hits) + (size - hits)
    mean = float(d.mean())
    stderr = float(d.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return mean, stderr


def infection_times(g: DirectedGraph, sources, params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """Infection time of every node on one random trace (inf if never within tau)."""
    src = _check_sources(g, sources)
    return _delay_single(g.out_ptr, g.out_idx, g.n, src, params.is_si, log1m(params.beta), params.beta,
                         params.tau_f, np.uint64(draw_base(rng)))


def make_observation(g: DirectedGraph, true_sources, params: ModelParams, rng: np.random.Generator,
                     min_infected: int | None = None, tau_cap: int = 10**6) -> Observation:
    """Simulate one cascade from ``true_sources`` and wrap it as an Observation.

    With ``min_infected``, ``params.tau`` is ignored: a single trace is drawn
    without a time limit and ``tau`` is set to the smallest step count at which
    the trace has reached ``min_infected`` nodes.
    """
    src = _check_sources(g, true_sources)
    if min_infected is None:
        cascade = simulate(g, src, params, rng)
        return Observation(np.array(sorted(cascade), dtype=np.int64), params, src)

    free = replace(params, tau=INF)
    times = infection_times(g, src, free, rng)
    finite = np.sort(times[np.isfinite(times)])
    if finite.size < min_infected:
        raise ValueError(f"cascade saturates at {finite.size} nodes, below target {min_infected}")
    tau = max(1, int(finite[min_infected - 1]))
    if tau > tau_cap:
        raise ValueError(f"target size {min_infected} needs tau={tau} > cap {tau_cap}")
    infected = np.flatnonzero(times <= tau)
    return Observation(infected, replace(params, tau=tau), src)


# ---------------------------------------------------------------------------
# observation file format

def format_observation(obs: Observation, ids: np.ndarray | None = None) -> str:
    conv = (lambda a: a) if ids is None else (lambda a: ids[a])
    tau = "inf" if obs.params.tau == INF else str(obs.params.tau)
    lines = [f"{obs.params.model} {obs.params.beta!r} {tau}",
             " ".join(str(x) for x in conv(obs.infected))]
    if obs.true_sources is not None:
        lines.append("sources: " + " ".join(str(x) for x in conv(obs.true_sources)))
    return "\n".join(lines) + "\n"


def parse_observation(text: str, remap: dict[int, int] | None = None) -> Observation:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) < 2:
        raise ValueError("observation needs a header line and an infected-node line")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"bad observation header {lines[0]!r}; expected 'model beta tau'")
    tau = INF if head[2].lower() in ("inf", "infinite", "infinity") else int(head[2])
    params = ModelParams(head[0], float(head[1]), tau)
    conv = (lambda x: int(x)) if remap is None else (lambda x: remap[int(x)])
    infected = [conv(x) for x in lines[1].split()]
    sources = None
    for extra in lines[2:]:
        if extra.startswith("sources:"):
            sources = [conv(x) for x in extra[len("sources:"):].split()]
        else:
            raise ValueError(f"unexpected line in observation: {extra!r}")
    return Observation(np.array(infected, dtype=np.int64), params,
                       None if sources is None else np.array(sources, dtype=np.int64))
