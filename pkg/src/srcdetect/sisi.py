"""Sampling driver: grow the RR pool until the stopping rule certifies the solution."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cascade import Observation
from .covering import post_optimize, select_sources, solve_covering
from .estimator import coverage, estimate_sd
from .graph import DirectedGraph
from .sampling import RRCollection, batch_sample

log = logging.getLogger(__name__)

STRICT = "strict"
RELAX = "relax"
C_CONST = 2.0 * (math.e - 2.0)


@dataclass(frozen=True)
class SisiConfig:
    epsilon: float = 0.1
    delta: float = 0.01
    mode: str = RELAX
    # cap on stored RR-set memberships, a memory guard
    max_samples: int | None = 50_000_000
    seed: int | None = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.mode not in (STRICT, RELAX):
            raise ValueError(f"mode must be {STRICT!r} or {RELAX!r}")


@dataclass
class SolutionReport:
    sources: frozenset[int]
    estimated_sd: float
    samples_used: int
    delta_observed: int
    epsilon_effective: float
    rounds: int
    fallback_used: bool = False
    capped: bool = False
    lam: float = 0.0
    stopping_sum: int = 0
    presolve_sources: frozenset[int] = field(default_factory=frozenset)


def compute_lambda(epsilon: float, delta: float, k: int, mode: str = STRICT) -> float:
    """Number of "bad" RR sets the stopping rule waits for.

    ``(1+eps) * 2c * (ln(2/delta) + k ln 2 + 1) / eps^2`` with ``c = 2(e-2)``;
    the relaxed variant replaces ``k ln 2`` by ``ln(2k)``.
    """
    if not 0.0 < epsilon < 1.0 or not 0.0 < delta < 1.0:
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode == STRICT:
        union = k * math.log(2.0)
    elif mode == RELAX:
        union = math.log(2.0 * k)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return (1.0 + epsilon) * 2.0 * C_CONST * (math.log(2.0 / delta) + union + 1.0) / epsilon**2


def run_sisi(g: DirectedGraph, obs: Observation, cfg: SisiConfig = SisiConfig()) -> SolutionReport:
    if obs.k == 0:
        raise ValueError("observation has no infected nodes")
    rng = np.random.default_rng(cfg.seed)
    eps = cfg.epsilon
    lam = compute_lambda(eps, cfg.delta, obs.k, cfg.mode)
    batch = math.ceil(lam)
    pool: RRCollection | None = None
    S, fallback, capped = frozenset(), False, False
    rounds = 0
    stop_sum = 0
    while True:
        pool = batch_sample(g, obs, batch, rng, pool)
        rounds += 1
        batch = pool.total
        if pool.n_blue:
            S, fallback = select_sources(pool, solve_covering(pool))
        if cfg.mode == STRICT and eps > 1.0 / (1.0 + pool.delta):
            eps = 1.0 / (1.0 + pool.delta)
            lam = compute_lambda(eps, cfg.delta, obs.k, cfg.mode)
        stop_sum = coverage(pool, S).cost if S else 0
        log.info("round %d |R|=%d delta=%d lambda=%.1f stop_sum=%d est_sd=%s",
                 rounds, pool.total, pool.delta, lam, stop_sum,
                 f"{estimate_sd(pool, S):.3f}" if S else "n/a")
        if S and stop_sum >= lam:
            break
        if cfg.max_samples is not None and pool.memberships >= cfg.max_samples:
            capped = True
            log.warning("membership cap %d reached after %d rounds; returning best so far",
                        cfg.max_samples, rounds)
            break
    if not S:
        raise RuntimeError("no blue RR sets were sampled before the cap; cannot select sources")
    final = post_optimize(S, pool, g.n)
    return SolutionReport(
        sources=final,
        estimated_sd=estimate_sd(pool, final),
        samples_used=pool.total,
        delta_observed=pool.delta,
        epsilon_effective=eps,
        rounds=rounds,
        fallback_used=fallback,
        capped=capped,
        lam=lam,
        stopping_sum=stop_sum,
        presolve_sources=S,
    )
