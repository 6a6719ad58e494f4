"""Solution-quality measures against known true sources."""
from __future__ import annotations

import numpy as np

from .cascade import Observation, forward_counts
from .graph import DirectedGraph
from .rng import draw_base


def f1_score(S, truth) -> float:
    """Average of precision and recall of ``S`` against ``truth``."""
    S, truth = set(S), set(truth)
    if not S or not truth:
        raise ValueError("f1_score needs non-empty detected and true source sets")
    hit = len(S & truth)
    return hit / (2 * len(S)) + hit / (2 * len(truth))


def detection_rate(S, truth) -> float:
    truth = set(truth)
    if not truth:
        raise ValueError("detection_rate needs a non-empty true source set")
    return 100.0 * len(set(S) & truth) / len(truth)


def mean_jaccard(g: DirectedGraph, X, obs: Observation, trials: int, base: int) -> float:
    hits, size = forward_counts(g, X, obs, trials, base, engine="delay")
    union = obs.k + size - hits
    return float(np.mean(np.where(union > 0, hits / np.maximum(union, 1), 1.0)))


def jaccard_quality(g: DirectedGraph, S, truth, obs: Observation, trials: int,
                    rng: np.random.Generator) -> float:
    """Mean Jaccard similarity of cascades from ``S`` over that from ``truth``.

    Both means use the same trial randomness, so ``S == truth`` gives exactly 1.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not len(S) or not len(truth):
        raise ValueError("jaccard_quality needs non-empty source sets")
    base = draw_base(rng)
    num = mean_jaccard(g, S, obs, trials, base)
    den = mean_jaccard(g, truth, obs, trials, base)
    if den == 0.0:
        raise ZeroDivisionError("true sources never overlap the observed cascade")
    return num / den
