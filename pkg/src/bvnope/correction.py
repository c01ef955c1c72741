"""Corrected display propensities after business-rule post-processing.

When rules rearrange rankings between randomization and display, the
randomizer's doubly stochastic matrix no longer gives the true
probability of an item appearing at a position. The corrections here
recover it, either exactly by enumerating the decomposition (and, for
stochastic rules, the rule subsets), or approximately by Monte Carlo.

Corrected matrices are indexed by item identity in the rows: the base
ranking supplies the item -> ranker-slot map, so arbitrary per-context
rankings are handled, not only the identity convention.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .bvn import BvnDecomposition, sample_component_indices
from .rankings import DoublyStochasticMatrix, Ranking
from .rules import PinRule, RuleSet, apply_rules, iter_subsets

CORRECTION_MODES = ("raw", "exact", "stochastic", "mc")


def _accumulate_over_subsets(
    base: Ranking, decomposition: BvnDecomposition, rules: RuleSet
) -> np.ndarray:
    n = len(base)
    out = np.zeros((n, n))
    subsets = list(iter_subsets(rules))
    for perm, p_m in decomposition.components:
        randomized = [0] * n
        for s, d in enumerate(perm.dest):
            randomized[d] = base.items[s]
        randomized_ranking = Ranking(randomized)
        for subset, p_s in subsets:
            displayed = apply_rules(subset, randomized_ranking)
            weight = p_m * p_s
            for pos, item in enumerate(displayed.items):
                out[item, pos] += weight
    return out


def correct_stochastic(
    base_ranking: Ranking, decomposition: BvnDecomposition, rules: RuleSet
) -> DoublyStochasticMatrix:
    """Exact corrected propensities for independently-firing stochastic rules.

    Sums ``p_m * P(S)`` over every decomposition component m and every rule
    subset S, attributing the mass to each item's final position. The cost
    is O(n * M * 2^|rules|); rule sets too large to enumerate are rejected
    (use :func:`correct_mc` there). With all rule probabilities equal to 1
    this reduces, term for term, to :func:`correct_exact`.
    """
    if len(base_ranking) != decomposition.n:
        raise ValueError("base ranking and decomposition sizes differ")
    return DoublyStochasticMatrix(_accumulate_over_subsets(base_ranking, decomposition, rules))


def correct_exact(
    base_ranking: Ranking, decomposition: BvnDecomposition, rules: RuleSet
) -> DoublyStochasticMatrix:
    """Corrected propensities when every rule fires with probability 1.

    Refuses stochastic rules outright: applying the deterministic
    correction to rules that only fire sometimes is precisely the silent
    misuse that produces biased propensities.
    """
    if not rules.is_deterministic:
        raise ValueError(
            "correct_exact requires all rule probabilities equal to 1; "
            "use correct_stochastic for stochastic rules"
        )
    return correct_stochastic(base_ranking, decomposition, rules)


class BvnRankingSampler:
    """Draws pre-rule randomized rankings: a decomposition component applied
    to a fixed base ranking."""

    def __init__(self, base_ranking: Ranking, decomposition: BvnDecomposition):
        if len(base_ranking) != decomposition.n:
            raise ValueError("base ranking and decomposition sizes differ")
        self.base = base_ranking.to_array()
        self.perms = decomposition.permutation_array()
        self.probs = decomposition.probabilities

    @property
    def n(self) -> int:
        return self.base.shape[0]

    def sample_batch(self, size: int, rng: np.random.Generator) -> np.ndarray:
        components = sample_component_indices(self.probs, rng.random(size))
        out = np.empty((size, self.n), dtype=np.int64)
        np.put_along_axis(out, self.perms[components], np.broadcast_to(self.base, (size, self.n)), axis=1)
        return out


def correct_mc(
    sampler,
    rules: RuleSet,
    n_samples: int,
    rng: np.random.Generator,
    chunk_size: int = 1 << 17,
) -> DoublyStochasticMatrix:
    """Monte Carlo corrected propensities from any pre-rule ranking sampler.

    ``sampler`` needs a ``sample_batch(size, rng) -> (size, n) int64``
    method (see :class:`BvnRankingSampler`). Rows of the result sum to 1
    exactly; per-entry standard error is at most ``0.5 / sqrt(n_samples)``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rules.validate_for(sampler.n)
    items = rules.item_array()
    targets = rules.target_array_0based()
    probs = rules.probability_array()
    counts: np.ndarray | None = None
    remaining = n_samples
    while remaining > 0:
        size = min(chunk_size, remaining)
        prerule = sampler.sample_batch(size, rng)
        displayed, _ = _kernels.apply_pin_rules_batch(
            prerule, items, targets, probs, rng.random((size, len(rules)))
        )
        batch = _kernels.display_counts(displayed)
        counts = batch if counts is None else counts + batch
        remaining -= size
    return DoublyStochasticMatrix(counts / n_samples)


def check_full_support(
    p_corrected: DoublyStochasticMatrix | np.ndarray,
    target: Ranking,
    threshold: float = 0.0,
) -> list[tuple[int, int]]:
    """Item/position pairs the target policy needs but logging cannot show.

    Returns every (item, 1-based target position) whose corrected
    propensity is <= ``threshold``; an empty list means evaluation of this
    target is safe.
    """
    entries = p_corrected.entries if isinstance(p_corrected, DoublyStochasticMatrix) else np.asarray(p_corrected)
    violations = []
    for pos, item in enumerate(target.items):
        if entries[item, pos] <= threshold:
            violations.append((item, pos + 1))
    return violations


class PropensityModel:
    """Per-observation propensity matrices under a fixed correction mode.

    The corrected matrix depends on the base ranking only through the
    slots the ruled items occupy, so matrices are computed once per
    distinct slot assignment ("key") at slot level and then re-indexed by
    item per observation. ``mode``:

    - ``raw``: the uncorrected randomizer matrix (rules ignored);
    - ``exact``: deterministic-rule correction (all probabilities 1);
    - ``stochastic``: exact power-set correction;
    - ``mc``: Monte Carlo correction with ``mc_samples`` draws per key.
    """

    def __init__(
        self,
        decomposition: BvnDecomposition,
        rules: RuleSet = RuleSet(),
        mode: str = "stochastic",
        mc_samples: int = 100_000,
        seed: int = 0,
    ):
        if mode not in CORRECTION_MODES:
            raise ValueError(f"unknown correction mode {mode!r}, expected one of {CORRECTION_MODES}")
        if mode == "exact" and not rules.is_deterministic:
            raise ValueError("exact correction requires deterministic rules")
        rules.validate_for(decomposition.n)
        self.decomposition = decomposition
        self.rules = rules if mode != "raw" else RuleSet()
        self.mode = mode
        self.mc_samples = mc_samples
        self.seed = seed
        self._slot_matrix = decomposition.reconstruct()
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    @property
    def n(self) -> int:
        return self.decomposition.n

    def _slot_level_matrix(self, key: tuple[int, ...]) -> np.ndarray:
        """Slot -> position propensities given the ruled items' slots."""
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        if self.mode == "raw" or not len(self.rules):
            matrix = self._slot_matrix
        else:
            slot_rules = RuleSet(
                tuple(
                    PinRule(slot, rule.target_position, rule.probability)
                    for slot, rule in zip(key, self.rules)
                )
            )
            identity = Ranking.identity(self.n)
            if self.mode == "mc":
                rng = np.random.default_rng(
                    np.random.SeedSequence(entropy=self.seed, spawn_key=key)
                )
                sampler = BvnRankingSampler(identity, self.decomposition)
                matrix = correct_mc(sampler, slot_rules, self.mc_samples, rng).entries
            else:
                matrix = correct_stochastic(identity, self.decomposition, slot_rules).entries
        self._cache[key] = matrix
        return matrix

    def matrix_for(self, base_ranking: Ranking) -> DoublyStochasticMatrix:
        """Corrected matrix (rows indexed by item) for one base ranking."""
        inv = np.empty(self.n, dtype=np.int64)
        inv[base_ranking.to_array()] = np.arange(self.n)
        key = tuple(int(inv[r.item]) for r in self.rules)
        return DoublyStochasticMatrix(self._slot_level_matrix(key)[inv, :])

    def matrices_for_logs(self, ranker_rankings: np.ndarray) -> np.ndarray:
        """(N, n, n) stack of item-indexed matrices, one per observation."""
        rankings = np.asarray(ranker_rankings, dtype=np.int64)
        n_logs, n = rankings.shape
        inv = np.empty_like(rankings)
        np.put_along_axis(inv, rankings, np.broadcast_to(np.arange(n), (n_logs, n)), axis=1)
        out = np.empty((n_logs, n, n))
        if not len(self.rules):
            out[:] = self._slot_matrix[inv, :]
            return out
        keys = inv[:, self.rules.item_array()]
        for key in np.unique(keys, axis=0):
            matrix = self._slot_level_matrix(tuple(int(k) for k in key))
            rows = np.flatnonzero((keys == key).all(axis=1))
            out[rows] = matrix[inv[rows], :]
        return out
