"""``srcdetect`` command line: gen, simulate, detect, benchmark."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .cascade import ModelParams, format_observation, make_observation, parse_observation
from .graph import GraphLoadError, gen_grid, gen_random_graph, read_edge_list

log = logging.getLogger("srcdetect")

REPORT_FIELDS = ("algorithm", "sources", "estimated_sd", "samples_used", "delta", "epsilon_effective",
                 "runtime_ms", "f1", "detection_rate", "q_jd", "rounds", "capped", "fallback_used")


class CliError(Exception):
    """Reported on stderr with exit status 1."""


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}")
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def _unit_interval(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: {text!r}")
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return v


def _beta(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: {text!r}")
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"beta must lie in (0, 1], got {text}")
    return v


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_graph(path: str):
    try:
        return read_edge_list(path)
    except FileNotFoundError:
        raise CliError(f"graph file not found: {path}")
    except GraphLoadError as exc:
        raise CliError(f"{path}: {exc}")


def _load_obs(path: str, remap):
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise CliError(f"observation file not found: {path}")
    try:
        return parse_observation(text, remap)
    except KeyError as exc:
        raise CliError(f"{path}: node {exc.args[0]} does not appear in the graph")
    except ValueError as exc:
        raise CliError(f"{path}: {exc}")


# ---------------------------------------------------------------------------

def cmd_gen(args) -> None:
    if args.kind == "grid":
        g = gen_grid(args.rows, args.cols)
    else:
        max_edges = args.nodes * (args.nodes - 1)
        if args.edges > max_edges:
            raise CliError(f"{args.edges} edges do not fit in a simple digraph on {args.nodes} nodes "
                           f"(at most {max_edges})")
        g = gen_random_graph(args.nodes, args.edges, args.seed)
    _emit(g.to_edge_list(), args.output)


def cmd_simulate(args) -> None:
    g, remap = _load_graph(args.graph)
    if args.sources > g.n:
        raise CliError(f"--sources {args.sources} exceeds the {g.n} graph nodes")
    rng = np.random.default_rng(args.seed)
    if args.min_infected is None:
        if args.tau is None:
            raise CliError("give --min-infected or --tau")
        src = rng.choice(g.n, size=args.sources, replace=False)
        obs = make_observation(g, src, ModelParams(args.model, args.beta, args.tau), rng)
    else:
        if args.min_infected > g.n:
            raise CliError(f"--min-infected {args.min_infected} exceeds the {g.n} graph nodes")
        try:
            obs = experiments.random_case(g, args.sources, args.min_infected, ModelParams(args.model, args.beta),
                                          rng, attempts=args.attempts, tau_cap=args.tau_cap)
        except ValueError as exc:
            raise CliError(str(exc))
    _emit(format_observation(obs, g.ids), args.output)


def cmd_detect(args) -> None:
    g, remap = _load_graph(args.graph)
    obs = _load_obs(args.obs, remap)
    if obs.k == 0:
        raise CliError("observation has no infected nodes")
    det = experiments.detect(args.algo, g, obs, seed=args.seed, epsilon=args.epsilon, delta=args.delta,
                             trials_per_eval=args.trials_per_eval, max_samples=args.max_samples)
    report = {
        "algorithm": det.algorithm,
        "sources": sorted(int(g.ids[u]) for u in det.sources),
        "estimated_sd": det.estimated_sd,
        "samples_used": det.samples_used,
        "delta": det.delta,
        "epsilon_effective": det.epsilon_effective,
        "runtime_ms": round(det.runtime_ms, 3) if args.timing else None,
        "f1": None,
        "detection_rate": None,
        "q_jd": None,
        "rounds": det.rounds,
        "capped": det.capped,
        "fallback_used": det.fallback_used,
    }
    if obs.true_sources is not None:
        sc = experiments.score(g, obs, det.sources, args.seed, eval_trials=0, qjd_trials=args.qjd_trials)
        report.update(f1=sc["f1"], detection_rate=sc["detection_rate"], q_jd=sc["q_jd"])
    _emit(json.dumps({k: report[k] for k in REPORT_FIELDS}, indent=2) + "\n", args.output)


def cmd_benchmark(args) -> None:
    if args.graph:
        g, _ = _load_graph(args.graph)
    else:
        g = gen_grid(*args.grid)

    def progress(ns, size, case, algo, det, sc):
        log.info("sources=%d size=%d case=%d %s -> %d nodes, sd=%.2f f1=%s",
                 ns, size, case, algo, len(det.sources), sc["sd"], sc["f1"])

    try:
        rows = experiments.benchmark(
            g, args.sources, args.sizes, args.algos, cases=args.cases, beta=args.beta, model=args.model,
            seed=args.seed, eval_trials=args.eval_trials, qjd_trials=args.qjd_trials, epsilon=args.epsilon,
            delta=args.delta, trials_per_eval=args.trials_per_eval, timing=args.timing, progress=progress)
    except ValueError as exc:
        raise CliError(str(exc))
    _emit(experiments.rows_to_csv(rows), args.output)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srcdetect", description="Multiple-source detection in SI/IC cascades.")
    p.add_argument("--threads", type=_positive(int), default=None,
                   help="worker threads for sampling and simulation (default: all)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a synthetic graph as an edge list")
    gsub = gen.add_subparsers(dest="kind", required=True)
    grid = gsub.add_parser("grid", help="directed 4-neighbour grid")
    grid.add_argument("--rows", type=_positive(int), required=True)
    grid.add_argument("--cols", type=_positive(int), required=True)
    grid.add_argument("-o", "--output")
    rnd = gsub.add_parser("random", help="uniform simple digraph with a fixed edge count")
    rnd.add_argument("--nodes", type=_positive(int), required=True)
    rnd.add_argument("--edges", type=int, required=True)
    rnd.add_argument("--seed", type=int, default=0)
    rnd.add_argument("-o", "--output")
    gen.set_defaults(func=cmd_gen)

    sim = sub.add_parser("simulate", help="draw random sources and record an observed cascade")
    sim.add_argument("--graph", required=True)
    sim.add_argument("--model", type=str.upper, choices=("SI", "IC"), default="SI")
    sim.add_argument("--beta", type=_beta, default=0.05)
    sim.add_argument("--sources", type=_positive(int), required=True)
    sim.add_argument("--min-infected", type=_positive(int))
    sim.add_argument("--tau", type=_positive(int), help="fixed horizon when --min-infected is not given")
    sim.add_argument("--tau-cap", type=_positive(int), default=10**6)
    sim.add_argument("--attempts", type=_positive(int), default=20,
                     help="source redraws allowed when a cascade saturates below the target")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("-o", "--output")
    sim.set_defaults(func=cmd_simulate)

    det = sub.add_parser("detect", help="estimate the source set of an observation")
    det.add_argument("--graph", required=True)
    det.add_argument("--obs", required=True)
    det.add_argument("--algo", choices=experiments.ALGORITHMS, default="sisi-relax")
    det.add_argument("--epsilon", type=_unit_interval, default=0.1)
    det.add_argument("--delta", type=_unit_interval, default=0.01)
    det.add_argument("--max-samples", type=_positive(int), default=50_000_000,
                     help="cap on stored RR-set memberships")
    det.add_argument("--trials-per-eval", type=_positive(int), default=200,
                     help="forward trials per candidate for greedy and max-degree")
    det.add_argument("--qjd-trials", type=int, default=10000, help="0 disables Q_JD")
    det.add_argument("--timing", action="store_true", help="fill runtime_ms (output is then not reproducible)")
    det.add_argument("--seed", type=int, default=0)
    det.add_argument("-o", "--output")
    det.set_defaults(func=cmd_detect)

    bench = sub.add_parser("benchmark", help="run the evaluation protocol and write per-cell means as CSV")
    src = bench.add_mutually_exclusive_group()
    src.add_argument("--graph")
    src.add_argument("--grid", type=_positive(int), nargs=2, metavar=("ROWS", "COLS"), default=(60, 60))
    bench.add_argument("--sources", type=_positive(int), nargs="+", default=[1, 5, 10, 20])
    bench.add_argument("--sizes", type=_positive(int), nargs="+", default=[100, 500, 1000])
    bench.add_argument("--algos", nargs="+", choices=experiments.ALGORITHMS,
                       default=["sisi", "sisi-relax", "greedy", "max-degree"])
    bench.add_argument("--cases", type=_positive(int), default=10)
    bench.add_argument("--model", type=str.upper, choices=("SI", "IC"), default="SI")
    bench.add_argument("--beta", type=_beta, default=0.05)
    bench.add_argument("--epsilon", type=_unit_interval, default=0.1)
    bench.add_argument("--delta", type=_unit_interval, default=0.01)
    bench.add_argument("--trials-per-eval", type=_positive(int), default=200)
    bench.add_argument("--eval-trials", type=_positive(int), default=1000,
                       help="forward trials for the mean_sd column")
    bench.add_argument("--qjd-trials", type=int, default=10000)
    bench.add_argument("--timing", action="store_true")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("-o", "--output")
    bench.set_defaults(func=cmd_benchmark)
    return p


def _set_threads(requested: int | None) -> None:
    if requested is None:
        return
    import numba
    numba.set_num_threads(min(requested, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    _set_threads(args.threads)
    try:
        args.func(args)
    except CliError as exc:
        print(f"srcdetect: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
