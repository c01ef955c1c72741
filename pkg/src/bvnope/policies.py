"""Deterministic target policies under evaluation."""
from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .rankings import Ranking


class TargetPolicy(ABC):
    """Deterministic map from a context to the ranking it would display."""

    name: str = "target"

    @abstractmethod
    def rank_items(self, scores: np.ndarray) -> np.ndarray:
        """(N, n) items-by-position rankings for a batch of score rows."""

    def rankings_for_logs(self, ranker_rankings: np.ndarray) -> np.ndarray:
        """Target rankings for logged observations (default: score-free)."""
        raise NotImplementedError


class FixedTargetPolicy(TargetPolicy):
    """Always displays the same ranking, whatever the context."""

    def __init__(self, ranking: Ranking, name: str = "fixed"):
        self.ranking = ranking
        self.name = name

    def rank_items(self, scores: np.ndarray) -> np.ndarray:
        n_rows = scores.shape[0]
        return np.tile(self.ranking.to_array(), (n_rows, 1))

    def rankings_for_logs(self, ranker_rankings: np.ndarray) -> np.ndarray:
        n_rows = ranker_rankings.shape[0]
        return np.tile(self.ranking.to_array(), (n_rows, 1))


class RankerTargetPolicy(TargetPolicy):
    """The logging ranker itself (useful for on-policy sanity checks)."""

    name = "ranker"

    def rank_items(self, scores: np.ndarray) -> np.ndarray:
        return np.argsort(-scores, axis=1, kind="stable").astype(np.int64)

    def rankings_for_logs(self, ranker_rankings: np.ndarray) -> np.ndarray:
        return np.asarray(ranker_rankings, dtype=np.int64)


def reference_target_policy(n_items: int = 10) -> FixedTargetPolicy:
    """The evaluation policy of the simulation study: items [7, 0, 3, 1] at
    the top, [2, 4] at the bottom, the rest in ascending index order in
    between (pinned down for determinism)."""
    top = [7, 0, 3, 1]
    bottom = [2, 4]
    if n_items < 10:
        raise ValueError("reference target policy needs at least 10 items")
    middle = [j for j in range(n_items) if j not in top + bottom]
    return FixedTargetPolicy(Ranking(top + middle + bottom), name="reference")
