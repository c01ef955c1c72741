"""Post-processing rules that pin items to fixed positions.

A pin takes effect by removing the item from its current slot and
re-inserting it at the target position; all other items keep their
relative order. When several pins fire together, every pinned item lands
exactly on its own target and the unpinned items fill the remaining
positions in order (for a single rule this is plain remove-and-insert).

Rules fire independently of each other and of the context. ``context``
parameters are accepted for forward compatibility with
context-conditional rule probabilities but are currently ignored.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .rankings import Permutation, Ranking

MAX_ENUMERABLE_RULES = 16


@dataclass(frozen=True)
class PinRule:
    """Pin ``item`` to 1-based ``target_position`` with this probability."""

    item: int
    target_position: int
    probability: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.probability <= 1.0:
            raise ValueError(f"rule probability must be in (0, 1], got {self.probability}")
        if self.target_position < 1:
            raise ValueError(f"target position is 1-based, got {self.target_position}")
        if self.item < 0:
            raise ValueError(f"item index must be nonnegative, got {self.item}")


@dataclass(frozen=True)
class RuleSet:
    """Ordered collection of pin rules; items and targets are all distinct."""

    rules: tuple[PinRule, ...] = ()

    def __init__(self, rules: Sequence[PinRule] = ()):
        rules = tuple(rules)
        items = [r.item for r in rules]
        targets = [r.target_position for r in rules]
        if len(set(items)) != len(items):
            raise ValueError(f"an item appears in two rules: {items}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"two rules share a target position: {targets}")
        object.__setattr__(self, "rules", rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self) -> Iterator[PinRule]:
        return iter(self.rules)

    @property
    def is_deterministic(self) -> bool:
        return all(r.probability == 1.0 for r in self.rules)

    def item_array(self) -> np.ndarray:
        return np.asarray([r.item for r in self.rules], dtype=np.int64)

    def target_array_0based(self) -> np.ndarray:
        return np.asarray([r.target_position - 1 for r in self.rules], dtype=np.int64)

    def probability_array(self) -> np.ndarray:
        return np.asarray([r.probability for r in self.rules])

    def with_probability(self, probability: float) -> "RuleSet":
        """Same pins, all applied with the given probability."""
        return RuleSet(
            tuple(PinRule(r.item, r.target_position, probability) for r in self.rules)
        )

    def validate_for(self, n: int) -> "RuleSet":
        """Check all items and targets fit a ranking of length ``n``.

        The batch kernels index unchecked, so this runs at every kernel
        boundary.
        """
        for rule in self.rules:
            if rule.item >= n:
                raise ValueError(f"rule item {rule.item} out of range for {n} items")
            if rule.target_position > n:
                raise ValueError(
                    f"rule target {rule.target_position} out of range for {n} positions"
                )
        return self

    def to_json_dict(self) -> dict:
        return {
            "rules": [
                {"item": r.item, "target": r.target_position, "p": r.probability}
                for r in self.rules
            ]
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RuleSet":
        return cls(
            tuple(
                PinRule(int(r["item"]), int(r["target"]), float(r.get("p", 1.0)))
                for r in data["rules"]
            )
        )


def _validate_against(ranking: Ranking, subset: RuleSet) -> None:
    n = len(ranking)
    for rule in subset:
        if rule.item not in ranking.items:
            raise ValueError(f"pinned item {rule.item} not present in ranking")
        if rule.target_position > n:
            raise ValueError(
                f"target position {rule.target_position} exceeds ranking length {n}"
            )


def apply_rules(subset: RuleSet, ranking: Ranking) -> Ranking:
    """Displayed ranking after applying every rule in ``subset``."""
    _validate_against(ranking, subset)
    n = len(ranking)
    out: list[int | None] = [None] * n
    pinned = {rule.item: rule.target_position - 1 for rule in subset}
    for item, pos in pinned.items():
        out[pos] = item
    fill = iter(p for p in range(n) if out[p] is None)
    for item in ranking.items:
        if item not in pinned:
            out[next(fill)] = item
    return Ranking(out)  # type: ignore[arg-type]


def rule_permutation(subset: RuleSet, ranking: Ranking) -> Permutation:
    """Position permutation realizing ``apply_rules(subset, ranking)``."""
    displayed = apply_rules(subset, ranking)
    final_pos = {item: pos for pos, item in enumerate(displayed.items)}
    return Permutation(tuple(final_pos[item] for item in ranking.items))


def apply_stochastic(
    rules: RuleSet,
    ranking: Ranking,
    rng: np.random.Generator,
    context=None,
) -> tuple[Ranking, RuleSet]:
    """Fire each rule independently with its probability.

    Returns the displayed ranking and the subset of rules that fired.
    """
    draws = rng.random(len(rules))
    applied = RuleSet(
        tuple(rule for rule, u in zip(rules, draws) if u < rule.probability)
    )
    return apply_rules(applied, ranking), applied


def subset_probability(rules: RuleSet, subset: RuleSet, context=None) -> float:
    """Probability that exactly the rules in ``subset`` fire."""
    chosen = set(subset.rules)
    if not chosen <= set(rules.rules):
        raise ValueError("subset contains rules not present in the rule set")
    prob = 1.0
    for rule in rules:
        prob *= rule.probability if rule in chosen else 1.0 - rule.probability
    return prob


def iter_subsets(rules: RuleSet) -> Iterator[tuple[RuleSet, float]]:
    """All subsets of the rule set with their probabilities.

    Zero-probability subsets are skipped, so with deterministic rules this
    yields exactly one entry (the full set).
    """
    if len(rules) > MAX_ENUMERABLE_RULES:
        raise ValueError(
            f"power set of {len(rules)} rules is too large to enumerate "
            f"(limit {MAX_ENUMERABLE_RULES}); use Monte Carlo correction instead"
        )
    for size in range(len(rules) + 1):
        for combo in itertools.combinations(rules.rules, size):
            subset = RuleSet(combo)
            prob = subset_probability(rules, subset)
            if prob > 0.0:
                yield subset, prob
