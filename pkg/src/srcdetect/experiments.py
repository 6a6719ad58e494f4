"""Test-case generation, per-algorithm runs and the benchmark table."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .baselines import greedy_detect, max_degree_detect
from .cascade import ModelParams, Observation, estimate_sd_forward, make_observation
from .graph import DirectedGraph
from .metrics import detection_rate, f1_score, jaccard_quality
from .sisi import RELAX, STRICT, SisiConfig, run_sisi

ALGORITHMS = ("sisi", "sisi-relax", "greedy", "max-degree")

BENCHMARK_COLUMNS = (
    "n_sources", "target_size", "algorithm", "cases", "mean_infected", "mean_detected",
    "mean_sd", "mean_f1", "mean_detection_rate", "mean_q_jd", "mean_runtime_ms",
)


@dataclass
class Detection:
    algorithm: str
    sources: frozenset[int]
    estimated_sd: float
    samples_used: int | None = None
    delta: int | None = None
    epsilon_effective: float | None = None
    rounds: int | None = None
    capped: bool = False
    fallback_used: bool = False
    runtime_ms: float = 0.0


def random_case(g: DirectedGraph, n_sources: int, min_infected: int, params: ModelParams,
                rng: np.random.Generator, attempts: int = 100, tau_cap: int = 10**6) -> Observation:
    """Uniform random sources; tau scanned up until the cascade has ``min_infected`` nodes.

    Source draws whose cascade saturates below the target are redrawn.
    """
    if n_sources > g.n:
        raise ValueError("more sources than nodes")
    last = None
    for _ in range(attempts):
        src = rng.choice(g.n, size=n_sources, replace=False)
        try:
            return make_observation(g, src, params, rng, min_infected=min_infected, tau_cap=tau_cap)
        except ValueError as exc:
            last = exc
    raise ValueError(f"no source draw reached {min_infected} infected nodes in {attempts} attempts: {last}")


def detect(algorithm: str, g: DirectedGraph, obs: Observation, seed: int, epsilon: float = 0.1,
           delta: float = 0.01, trials_per_eval: int = 200, max_samples: int | None = 50_000_000) -> Detection:
    start = time.perf_counter()
    if algorithm in ("sisi", "sisi-relax"):
        mode = STRICT if algorithm == "sisi" else RELAX
        rep = run_sisi(g, obs, SisiConfig(epsilon, delta, mode, max_samples, seed))
        det = Detection(algorithm, rep.sources, rep.estimated_sd, rep.samples_used, rep.delta_observed,
                        rep.epsilon_effective, rep.rounds, rep.capped, rep.fallback_used)
    elif algorithm in ("greedy", "max-degree"):
        rng = np.random.default_rng(seed)
        fn = greedy_detect if algorithm == "greedy" else max_degree_detect
        S = fn(g, obs, trials_per_eval, rng)
        est, _ = estimate_sd_forward(g, S, obs, trials_per_eval, np.random.default_rng(seed), engine="delay")
        det = Detection(algorithm, S, est)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    det.runtime_ms = 1000.0 * (time.perf_counter() - start)
    return det


def score(g: DirectedGraph, obs: Observation, S, seed: int, eval_trials: int = 1000,
          qjd_trials: int = 10000) -> dict:
    """Forward-simulated E[D] (skipped when ``eval_trials`` is 0) plus, when true sources are known, F1, detection rate and Q_JD."""
    sd = sd_err = None
    if eval_trials > 0:
        sd, sd_err = estimate_sd_forward(g, S, obs, eval_trials, np.random.default_rng([seed, 1]), engine="delay")
    out = {"sd": sd, "sd_stderr": sd_err, "f1": None, "detection_rate": None, "q_jd": None}
    if obs.true_sources is not None and len(S):
        truth = obs.true_sources.tolist()
        out["f1"] = f1_score(S, truth)
        out["detection_rate"] = detection_rate(S, truth)
        if qjd_trials > 0:
            out["q_jd"] = jaccard_quality(g, S, truth, obs, qjd_trials, np.random.default_rng([seed, 2]))
    return out


def benchmark(g: DirectedGraph, source_counts, sizes, algorithms, cases: int = 10, beta: float = 0.05,
              model: str = "SI", seed: int = 0, eval_trials: int = 1000, qjd_trials: int = 10000,
              epsilon: float = 0.1, delta: float = 0.01, trials_per_eval: int = 200,
              timing: bool = False, progress=None) -> list[dict]:
    """Per (source count, size, algorithm) means over ``cases`` seeded test cases."""
    if not algorithms:
        raise ValueError("at least one algorithm is required")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    rows = []
    params = ModelParams(model, beta)
    for ns in source_counts:
        for size in sizes:
            acc = {a: [] for a in algorithms}
            infected = []
            for c in range(cases):
                case_seed = [seed, ns, size, c]
                obs = random_case(g, ns, size, params, np.random.default_rng(case_seed))
                infected.append(obs.k)
                for a in algorithms:
                    det = detect(a, g, obs, seed=hash_seed(case_seed), epsilon=epsilon, delta=delta,
                                 trials_per_eval=trials_per_eval)
                    sc = score(g, obs, det.sources, hash_seed(case_seed), eval_trials, qjd_trials)
                    acc[a].append((len(det.sources), sc, det.runtime_ms))
                    if progress:
                        progress(ns, size, c, a, det, sc)
            for a in algorithms:
                res = acc[a]
                rows.append({
                    "n_sources": ns,
                    "target_size": size,
                    "algorithm": a,
                    "cases": cases,
                    "mean_infected": float(np.mean(infected)),
                    "mean_detected": float(np.mean([r[0] for r in res])),
                    "mean_sd": float(np.mean([r[1]["sd"] for r in res])),
                    "mean_f1": _mean_opt([r[1]["f1"] for r in res]),
                    "mean_detection_rate": _mean_opt([r[1]["detection_rate"] for r in res]),
                    "mean_q_jd": _mean_opt([r[1]["q_jd"] for r in res]),
                    "mean_runtime_ms": float(np.mean([r[2] for r in res])) if timing else None,
                })
    return rows


def hash_seed(parts) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1, np.uint32)[0])


def _mean_opt(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCHMARK_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(row[k]) for k in BENCHMARK_COLUMNS})
    return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return v
