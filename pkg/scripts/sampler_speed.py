"""Time the event-driven RR sampler against the step-by-step one on a grid."""
import argparse
import time

import numpy as np

from srcdetect.cascade import SI, ModelParams
from srcdetect.experiments import random_case
from srcdetect.graph import gen_grid
from srcdetect.rng import log1m
from srcdetect.sampling import _KINDS, _batch


def best_of(kind, g, in_vi, beta, tau, count, reps=3):
    args = (g.in_ptr, g.in_idx, g.n, in_vi, beta, log1m(beta), float(tau))
    _batch(_KINDS[kind], *args, np.uint64(1), 0, 10, int(in_vi.sum()))  # compile
    times = []
    for r in range(reps):
        t = time.perf_counter()
        _batch(_KINDS[kind], *args, np.uint64(2 + r), 0, count, int(in_vi.sum()))
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--side", type=int, default=60)
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--taus", type=int, nargs="+", default=[10, 50, 100, 200])
    p.add_argument("--count", type=int, default=20000)
    p.add_argument("--seed", type=int, default=33)
    a = p.parse_args()
    g = gen_grid(a.side, a.side)
    obs = random_case(g, 2, 100, ModelParams(SI, a.beta), np.random.default_rng(a.seed))
    in_vi = obs.mask(g.n)
    print("tau  fast_s  naive_s  ratio")
    for tau in a.taus:
        f = best_of("fast", g, in_vi, a.beta, tau, a.count)
        nv = best_of("naive", g, in_vi, a.beta, tau, a.count)
        print(f"{tau:>3}  {f:6.3f}  {nv:7.3f}  {nv / f:5.2f}", flush=True)


if __name__ == "__main__":
    main()
