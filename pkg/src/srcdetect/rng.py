"""Counter-based random streams usable from numba kernels.

Every stochastic kernel receives a 64-bit ``base`` seed and derives an
independent stream per work item (RR-set ordinal, trial index, ...) with
:func:`stream_seed`.  Results therefore depend only on ``(base, ordinal)``
and never on thread scheduling.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, inline="always")
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def stream_seed(base, a, b):
    """State for the stream identified by ``(base, a, b)``."""
    h = mix64(np.uint64(base) ^ mix64(np.uint64(a) + _GOLDEN))
    return mix64(h ^ mix64(np.uint64(b) * _M2 + _M1))


@njit(cache=True, inline="always")
def next_state(state):
    return np.uint64(state) + _GOLDEN


@njit(cache=True, inline="always")
def to_open_unit(state):
    """Map a stream state to a float strictly inside (0, 1)."""
    z = mix64(state)
    return ((z >> _S11) + 0.5) * _INV53


@njit(cache=True, inline="always")
def hash_unit(base, a, b):
    """Stateless uniform in (0, 1) keyed on ``(base, a, b)``."""
    return to_open_unit(stream_seed(base, a, b))


@njit(cache=True, inline="always")
def geometric_delay(r, log1m_beta):
    """Number of Bernoulli(beta) trials until first success, from r in (0,1).

    ``log1m_beta`` is ``log(1 - beta)``; pass 0.0 for beta == 1.
    """
    if log1m_beta == 0.0:
        return 1.0
    t = float(math.ceil(math.log(1.0 - r) / log1m_beta))
    if t < 1.0:
        t = 1.0
    return t


def log1m(beta: float) -> float:
    """``log(1-beta)`` with beta == 1 mapped to the sentinel 0.0."""
    return 0.0 if beta >= 1.0 else float(np.log1p(-beta))


def make_rng(seed=None) -> np.random.Generator:
    return np.random.default_rng(seed)


def draw_base(rng: np.random.Generator) -> int:
    """Consume one 63-bit word from ``rng`` to seed a kernel launch."""
    return int(rng.integers(0, 2**63 - 1, dtype=np.int64))
