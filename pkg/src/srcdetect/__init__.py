"""Multiple-source detection for SI and IC cascades via reverse-reachable sampling."""
from .cascade import IC, SI, ModelParams, Observation, make_observation, simulate
from .graph import DirectedGraph, gen_grid, gen_random_graph, load_edge_list, read_edge_list
from .sisi import RELAX, STRICT, SisiConfig, SolutionReport, compute_lambda, run_sisi

__all__ = [
    "DirectedGraph", "IC", "ModelParams", "Observation", "RELAX", "SI", "STRICT", "SisiConfig",
    "SolutionReport", "compute_lambda", "gen_grid", "gen_random_graph", "load_edge_list",
    "make_observation", "read_edge_list", "run_sisi", "simulate",
]
