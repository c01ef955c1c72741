"""Numpy fallback implementations of the batch kernels.

Contracts (shared with the compiled backend):

- rankings/displayed are (N, n) int64 arrays of items by position;
- rule arrays describe pins: item index, 0-based target, firing probability;
- u_* arrays are uniform draws in [0, 1), one per decision, supplied by the
  caller so that both backends consume randomness identically;
- relevance is (N, n) float64 indexed by item, bias is (n,) float64 indexed
  by position.
"""
from __future__ import annotations

import numpy as np


def apply_pin_rules_batch(
    rankings: np.ndarray,
    rule_items: np.ndarray,
    rule_targets: np.ndarray,
    rule_probs: np.ndarray,
    u_rules: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Fire pins per row and rebuild each ranking (pins exact, rest in order)."""
    n_logs, n = rankings.shape
    n_rules = len(rule_items)
    if n_rules == 0:
        return rankings.copy(), np.zeros((n_logs, 0), dtype=np.uint8)

    applied = u_rules < rule_probs[None, :]

    # per-row item -> pin target (-1 when not pinned) and taken positions
    target_of_item = np.full((n_logs, n), -1, dtype=np.int64)
    taken = np.zeros((n_logs, n), dtype=bool)
    for r in range(n_rules):
        rows = applied[:, r]
        target_of_item[rows, rule_items[r]] = rule_targets[r]
        taken[rows, rule_targets[r]] = True

    target_by_source = np.take_along_axis(target_of_item, rankings, axis=1)
    pinned_source = target_by_source >= 0

    # free positions in ascending order, then the i-th unpinned source item
    # goes to the i-th free position
    free_positions = np.argsort(taken, axis=1, kind="stable")
    unpinned_index = np.cumsum(~pinned_source, axis=1) - 1
    fill_dest = np.take_along_axis(free_positions, np.maximum(unpinned_index, 0), axis=1)
    dest = np.where(pinned_source, target_by_source, fill_dest)

    displayed = np.empty_like(rankings)
    np.put_along_axis(displayed, dest, rankings, axis=1)
    return displayed, applied.astype(np.uint8)


def bernoulli_clicks_batch(
    displayed: np.ndarray,
    relevance: np.ndarray,
    bias: np.ndarray,
    u_clicks: np.ndarray,
) -> np.ndarray:
    """Position-based click model: click iff u < bias[pos] * relevance[item]."""
    relevance_at_position = np.take_along_axis(relevance, displayed, axis=1)
    return (u_clicks < bias[None, :] * relevance_at_position).astype(np.uint8)


def display_counts(displayed: np.ndarray) -> np.ndarray:
    """(n, n) matrix counting how often each item appeared at each position."""
    n_logs, n = displayed.shape
    flat = displayed * n + np.arange(n, dtype=np.int64)[None, :]
    counts = np.bincount(flat.ravel(), minlength=n * n)
    return counts.reshape(n, n).astype(float)
