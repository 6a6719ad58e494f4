import itertools
import os
import warnings
from collections import deque

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from srcdetect.cascade import INF
from srcdetect.graph import DirectedGraph

warnings.filterwarnings("ignore", module="numba")

settings.register_profile(
    "default", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow],
    derandomize=True)
settings.register_profile("ci", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# ---------------------------------------------------------------------------
# brute-force oracles shared by several test modules

def reach_within(g: DirectedGraph, sources, tau) -> set[int]:
    """Nodes at BFS distance <= tau from ``sources`` (the beta=1 SI cascade)."""
    dist = {int(s): 0 for s in sources}
    q = deque(dist)
    while q:
        u = q.popleft()
        if tau != INF and dist[u] >= tau:
            continue
        for v in g.out_adj(u):
            v = int(v)
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return set(dist)


def exact_sd(g, S, infected, tau) -> int:
    cascade = reach_within(g, S, tau) if len(S) else set()
    infected = set(int(v) for v in infected)
    return len(cascade ^ infected)


def all_subsets(items):
    items = sorted(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


@st.composite
def digraphs(draw, min_nodes=1, max_nodes=8, max_edges=None):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    if max_edges is not None:
        chosen = draw(st.lists(st.sampled_from(pairs), max_size=max_edges, unique=True)) if pairs else []
    else:
        chosen = [p for p in pairs if draw(st.booleans())] if pairs else []
    return DirectedGraph.from_edges(n, chosen)


@pytest.fixture
def path3():
    return DirectedGraph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------------------
# acceptance verdicts, echoed at the end of the run

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
