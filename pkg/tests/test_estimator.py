import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srcdetect.cascade import INF, SI, ModelParams, Observation, estimate_sd_forward
from srcdetect.estimator import CoverageCounts, coverage, estimate_sd
from srcdetect.graph import gen_grid, gen_random_graph
from srcdetect.sampling import RRCollection, batch_sample

from conftest import digraphs, exact_sd


def hand_pool():
    # nodes a=0, b=1 infected; 2 is outside
    obs = Observation([0, 1], ModelParams(SI, 0.5))
    return RRCollection.from_sets(3, obs, [(0, {0, 1}), (2, {1})])


def test_coverage_hand_example():
    pool = hand_pool()
    assert coverage(pool, {0}) == CoverageCounts(0, 0, 2)
    assert coverage(pool, {1}) == CoverageCounts(0, 1, 2)


def test_coverage_extremes():
    g = gen_grid(5, 5)
    obs = Observation(range(8), ModelParams(SI, 0.4, 3))
    pool = batch_sample(g, obs, 5000, np.random.default_rng(0))
    assert coverage(pool, set()) == CoverageCounts(pool.n_blue, 0, pool.total)
    full = coverage(pool, range(8))
    assert full.uncovered_blue == 0
    assert full.covered_red == pool.n_red - pool.red_empty


def test_coverage_rejects_outside_nodes():
    with pytest.raises(ValueError):
        coverage(hand_pool(), {2})


def test_estimate_zero_when_everything_right():
    obs = Observation([0], ModelParams(SI, 0.5))
    pool = RRCollection.from_sets(2, obs, [(0, {0}), (1, set())])
    assert estimate_sd(pool, {0}) == 0.0


def test_empty_set_estimate_tends_to_k():
    g = gen_grid(6, 6)
    obs = Observation(range(9), ModelParams(SI, 0.3, 3))
    pool = batch_sample(g, obs, 100_000, np.random.default_rng(1))
    p = 9 / 36
    assert abs(estimate_sd(pool, set()) - 9) < 3 * 36 * math.sqrt(p * (1 - p) / pool.total)


@given(digraphs(min_nodes=2, max_nodes=8), st.sampled_from([1, 2, INF]), st.data())
def test_estimate_close_to_exact_when_deterministic(g, tau, data):
    V = sorted(data.draw(st.sets(st.integers(0, g.n - 1), min_size=1)))
    S = data.draw(st.sets(st.sampled_from(V)))
    pool = batch_sample(g, Observation(V, ModelParams(SI, 1.0, tau)), 20_000, np.random.default_rng(0))
    exact = exact_sd(g, S, V, tau)
    # each root contributes a deterministic 0/1; only the root draw is random
    assert abs(estimate_sd(pool, S) - exact) <= 0.05 * max(1, exact) + 4 * g.n / math.sqrt(pool.total)


def test_estimate_agrees_with_forward_oracle():
    g = gen_random_graph(30, 90, 5)
    rng = np.random.default_rng(5)
    V = sorted(rng.choice(30, 12, replace=False).tolist())
    obs = Observation(V, ModelParams(SI, 0.3, 3))
    S = V[:3]
    pool = batch_sample(g, obs, 100_000, rng)
    X = np.zeros(pool.total)
    c = coverage(pool, S)
    X[:c.cost] = 1.0
    est, est_se = 30 * X.mean(), 30 * X.std(ddof=1) / math.sqrt(X.size)
    fwd, fwd_se = estimate_sd_forward(g, S, obs, 100_000, rng)
    assert estimate_sd(pool, S) == pytest.approx(est)
    assert abs(est - fwd) < 2.576 * (est_se + fwd_se)
