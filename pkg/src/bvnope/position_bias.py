"""Position-bias curve estimation from randomized logs.

Randomization shows the item a ranker placed at slot s at varying
positions, independently of the context, so click-through rates observed
for the same slot at different positions differ only by position bias.
Counts are therefore keyed by (ranker slot, displayed position); under
the convention that the ranker orders items by their index, the slot is
the item index.

The fit is a documented stand-in for the gradient-based procedure used
in the literature: it matches log CTR ratios within slots to log bias
differences with a decreasing-learning-rate gradient descent on the log
curve. Any consistent estimator exercises the same downstream path
(PBM/INTERPOL weights), which is what matters here.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimators import PositionBiasCurve
from .logs import LogDataset, ObservationLog

logger = logging.getLogger("bvnope")

WEIGHTINGS = ("inverse-variance", "min-impressions")


@dataclass(frozen=True)
class InterventionCounts:
    """Impression and click tallies per (ranker slot, displayed position)."""

    impressions: np.ndarray  # (n, n) float
    clicks: np.ndarray  # (n, n) float

    @property
    def n_positions(self) -> int:
        return self.impressions.shape[1]


def harvest_interventions(logs: LogDataset | Sequence[ObservationLog]) -> InterventionCounts:
    """Tally displays and clicks of each ranker slot at each position."""
    if not isinstance(logs, LogDataset):
        logs = list(logs)
        if not logs:
            raise ValueError("no logs to harvest")
        n = len(logs[0].displayed_ranking)
        impressions = np.zeros((n, n))
        clicks = np.zeros((n, n))
        for log in logs:
            slot_of_item = {item: s for s, item in enumerate(log.ranker_ranking.items)}
            for pos, item in enumerate(log.displayed_ranking.items):
                slot = slot_of_item[item]
                impressions[slot, pos] += 1
                clicks[slot, pos] += log.clicks[pos]
        return InterventionCounts(impressions, clicks)

    n = logs.n_items
    inv_ranker = np.empty_like(logs.ranker_rankings)
    np.put_along_axis(
        inv_ranker,
        logs.ranker_rankings,
        np.broadcast_to(np.arange(n, dtype=np.int64), logs.ranker_rankings.shape),
        axis=1,
    )
    slot_at_position = np.take_along_axis(inv_ranker, logs.displayed_rankings, axis=1)
    flat = slot_at_position * n + np.arange(n, dtype=np.int64)[None, :]
    impressions = np.bincount(flat.ravel(), minlength=n * n).reshape(n, n).astype(float)
    clicks = np.bincount(
        flat.ravel(), weights=logs.clicks.astype(float).ravel(), minlength=n * n
    ).reshape(n, n)
    return InterventionCounts(impressions, clicks)


@dataclass(frozen=True)
class SgdConfig:
    """Gradient-descent settings; the learning rate at epoch t is
    initial_lr / (1 + decay * t)."""

    initial_lr: float = 0.3
    decay: float = 0.01
    epochs: int = 500
    seed: int = 0
    weighting: str = "inverse-variance"

    def __post_init__(self):
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}, expected one of {WEIGHTINGS}")


def _pair_data(counts: InterventionCounts, weighting: str):
    """All within-slot cell pairs with log-CTR gaps and regression weights."""
    imps = counts.impressions
    clicks = counts.clicks
    usable = (imps > 0) & (clicks > 0)
    pos_a, pos_b, gaps, weights = [], [], [], []
    for slot in range(imps.shape[0]):
        cells = np.flatnonzero(usable[slot])
        if cells.size < 2:
            continue
        log_ctr = np.log(clicks[slot, cells] / imps[slot, cells])
        a, b = np.triu_indices(cells.size, k=1)
        pos_a.append(cells[a])
        pos_b.append(cells[b])
        gaps.append(log_ctr[a] - log_ctr[b])
        if weighting == "min-impressions":
            w = np.minimum(imps[slot, cells[a]], imps[slot, cells[b]])
        else:
            # delta-method variance of a log click rate is roughly 1/clicks
            w = 1.0 / (1.0 / clicks[slot, cells[a]] + 1.0 / clicks[slot, cells[b]])
        weights.append(w)
    if not pos_a:
        raise ValueError("no usable slot/position pairs (all clicks empty?)")
    return (
        np.concatenate(pos_a),
        np.concatenate(pos_b),
        np.concatenate(gaps),
        np.concatenate(weights),
    )


def fit_position_bias(
    counts: InterventionCounts,
    n_positions: int | None = None,
    config: SgdConfig = SgdConfig(),
) -> PositionBiasCurve:
    """Fit the bias curve by weighted least squares in log space via GD.

    Minimizes sum over within-slot cell pairs of
    ``w * (log CTR ratio - (log b_k - log b_k'))^2`` with full-batch
    gradient steps and the decreasing learning-rate schedule from
    ``config``. The result is normalized so the first position has bias
    exactly 1. Deterministic given the inputs (the seed is reserved for
    mini-batched variants). Raises if any position was never impressed.
    """
    n = n_positions or counts.n_positions
    if counts.impressions.sum(axis=0).min() <= 0:
        pos = int(counts.impressions.sum(axis=0).argmin())
        raise ValueError(f"position {pos + 1} has no impressions; curve unidentifiable there")

    pos_a, pos_b, gaps, weights = _pair_data(counts, config.weighting)
    weights = weights / weights.sum()

    theta = np.zeros(n)
    for epoch in range(config.epochs):
        lr = config.initial_lr / (1.0 + config.decay * epoch)
        residual = gaps - (theta[pos_a] - theta[pos_b])
        grad = -2.0 * (
            np.bincount(pos_a, weights=weights * residual, minlength=n)
            - np.bincount(pos_b, weights=weights * residual, minlength=n)
        )
        theta -= lr * grad
        theta -= theta[0]  # anchor log b(1) = 0

    b = np.exp(theta)
    b[0] = 1.0
    if np.any(np.diff(b) > 0):
        # estimation noise can produce non-monotone curves; report, don't fix
        logger.info("fitted position-bias curve is not monotone decreasing: %s", np.round(b, 4))
    return PositionBiasCurve.from_array(b)
