import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srcdetect.baselines import _Evaluator, degree_order, greedy_detect, max_degree_detect
from srcdetect.cascade import SI, ModelParams, Observation, estimate_sd_forward, forward_counts, make_observation
from srcdetect.graph import DirectedGraph, gen_grid, gen_random_graph

from conftest import exact_sd


def chain_with_tail():
    # 0 -> 1 -> 2 -> 3, all infected; 3 -> 4 uninfected
    return DirectedGraph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])


@given(st.integers(0, 2**31), st.sampled_from([SI, "IC"]))
def test_evaluator_matches_forward_engine(seed, model):
    g = gen_random_graph(30, 90, seed)
    rng = np.random.default_rng(seed)
    V = sorted(rng.choice(30, 10, replace=False).tolist())
    obs = Observation(V, ModelParams(model, 0.3, 4))
    ev = _Evaluator(g, obs, 64, 123)
    added = []
    for u in V[:3]:
        m = int(ev.marginals(np.array([u]))[0])
        before = ev.total
        ev.add(u)
        added.append(u)
        assert ev.total - before == m
        hits, size = forward_counts(g, added, obs, 64, 123, engine="delay")
        assert ev.total == int((obs.k - hits + size - hits).sum())


def test_greedy_finds_deterministic_source():
    g = chain_with_tail()
    obs = Observation([1, 2, 3], ModelParams(SI, 1.0, 2))
    V = obs.infected.tolist()
    singles = {u: exact_sd(g, [u], V, 2) for u in V}
    assert min(singles, key=singles.get) == 1 and sorted(singles.values())[1] > singles[1]
    assert greedy_detect(g, obs, 20, np.random.default_rng(0)) == {1}


def test_greedy_stops_when_nothing_helps():
    g = chain_with_tail()
    obs = Observation([0, 1, 2, 3], ModelParams(SI, 1.0, 3))
    S, trace = greedy_detect(g, obs, 10, np.random.default_rng(0), return_trace=True)
    assert S == {0} and trace == [4.0, 0.0]


def test_greedy_tie_breaks_to_smaller_id():
    # two isolated infected nodes: each single pick gives D=1, then the other finishes it
    g = DirectedGraph.from_edges(3, [(2, 0)])
    obs = Observation([0, 1], ModelParams(SI, 1.0, 1))
    S, trace = greedy_detect(g, obs, 5, np.random.default_rng(0), return_trace=True)
    assert S == {0, 1} and trace == [2.0, 1.0, 0.0]


@given(st.integers(0, 2**31))
def test_greedy_trace_non_increasing(seed):
    g = gen_grid(6, 6)
    rng = np.random.default_rng(seed)
    obs = make_observation(g, rng.choice(36, 2, replace=False), ModelParams(SI, 0.3), rng, min_infected=10)
    S, trace = greedy_detect(g, obs, 50, rng, return_trace=True)
    assert S and S <= set(obs.infected.tolist())
    assert all(b <= a for a, b in zip(trace[1:], trace[2:]))


def test_max_degree_single_node():
    g = gen_grid(3, 3)
    assert max_degree_detect(g, Observation([4], ModelParams(SI, 0.5, 1)), 10) == {4}


def test_max_degree_star_center_first():
    g = DirectedGraph.from_edges(5, [(0, i) for i in range(1, 5)])
    obs = Observation(range(5), ModelParams(SI, 1.0, 1))
    assert degree_order(g, obs)[0] == 0
    # leaves add nothing but do not hurt either, so they are kept
    S = max_degree_detect(g, obs, 10, np.random.default_rng(0))
    assert 0 in S and exact_sd(g, S, range(5), 1) == 0


def test_max_degree_stops_at_first_increase():
    # hub 0 explains V_I within two steps; 5 ranks second and would add false positives 6, 7
    edges = [(0, 1), (0, 2), (0, 3), (0, 4), (1, 5), (5, 6), (5, 7)]
    g = DirectedGraph.from_edges(8, edges)
    obs = make_observation(g, [0], ModelParams(SI, 1.0, 2), np.random.default_rng(0))
    V = obs.infected.tolist()
    assert V == [0, 1, 2, 3, 4, 5]
    assert degree_order(g, obs).tolist()[:2] == [0, 5]
    assert exact_sd(g, [0, 5], V, 2) > exact_sd(g, [0], V, 2)
    assert max_degree_detect(g, obs, 10, np.random.default_rng(0)) == {0}


def test_baselines_deterministic_given_seed():
    g = gen_grid(8, 8)
    obs = make_observation(g, [9, 40], ModelParams(SI, 0.3), np.random.default_rng(3), min_infected=15)
    for fn in (greedy_detect, max_degree_detect):
        a = fn(g, obs, 64, np.random.default_rng(11))
        assert a == fn(g, obs, 64, np.random.default_rng(11))
        assert a and a <= set(obs.infected.tolist())


def test_baselines_reject_empty_observation():
    g = gen_grid(2, 2)
    obs = Observation([], ModelParams(SI, 0.5))
    with pytest.raises(ValueError):
        greedy_detect(g, obs)
    with pytest.raises(ValueError):
        max_degree_detect(g, obs)


def test_greedy_is_exact_on_tiny_deterministic_instances():
    for seed in range(5):
        g = gen_random_graph(8, 12, seed)
        obs = make_observation(g, [seed % 8], ModelParams(SI, 1.0, 2), np.random.default_rng(seed))
        V = obs.infected.tolist()
        S = greedy_detect(g, obs, 5, np.random.default_rng(0))
        best_single = min(exact_sd(g, [u], V, 2) for u in V)
        assert exact_sd(g, S, V, 2) <= best_single
        assert estimate_sd_forward(g, S, obs, 5, np.random.default_rng(0))[0] == exact_sd(g, S, V, 2)
