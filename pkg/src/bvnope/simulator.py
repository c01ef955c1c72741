"""Synthetic click-log generation.

The generative process per impression: items get one-hot feature vectors
plus per-dimension Gaussian noise; scores are dot products with +-1
relevance vectors; the deterministic ranker sorts by score (ties broken
by ascending item index); the ranking is randomized with a sampled
decomposition component; pins fire stochastically; clicks follow a
position-based model, click probability = bias(position) * relevance.

``simulate_dataset`` is the canonical batch path: given a seed its JSONL
output is byte-identical across runs (randomness is consumed in fixed
chunk order: noise, component draws, rule draws, click draws).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bvn import BvnDecomposition, decompose, sample, sample_component_indices, stay_probability_matrix
from .logs import LogDataset, ObservationLog
from .policies import TargetPolicy
from .rankings import Ranking, apply_permutation
from .rules import RuleSet, apply_stochastic

_CHUNK = 1 << 16  # fixed so that chunking never changes the random stream

POSITION_BIAS_KINDS = ("inverse_rank", "flat")


@dataclass(frozen=True)
class SimulationConfig:
    """Knobs of the synthetic experiment; defaults match the reference study."""

    n_rankings: int = 50_000
    n_items: int = 10
    stay_probability: float = 0.95
    relevant_items: tuple[int, ...] = (1, 2, 4, 7)
    noise_std: float = 1.0
    rules: RuleSet = field(default_factory=RuleSet)
    seed: int = 0
    position_bias: str = "inverse_rank"

    def __post_init__(self):
        if self.n_items < 2:
            raise ValueError("need at least 2 items")
        if not set(self.relevant_items) <= set(range(self.n_items)):
            raise ValueError("relevant_items must be item indices")
        if not 0.0 < self.stay_probability <= 1.0:
            raise ValueError("stay_probability must be in (0, 1]")
        if self.position_bias not in POSITION_BIAS_KINDS:
            raise ValueError(f"unknown position_bias {self.position_bias!r}")
        self.rules.validate_for(self.n_items)

    def bias_curve(self) -> np.ndarray:
        """True examination probability per 1-based position."""
        if self.position_bias == "flat":
            return np.ones(self.n_items)
        return 1.0 / np.arange(1, self.n_items + 1)

    def relevance_signs(self) -> np.ndarray:
        signs = -np.ones(self.n_items)
        signs[list(self.relevant_items)] = 1.0
        return signs

    def propensity_matrix(self):
        return stay_probability_matrix(self.n_items, self.stay_probability)

    def to_json_dict(self) -> dict:
        return {
            "n_rankings": self.n_rankings,
            "n_items": self.n_items,
            "stay_probability": self.stay_probability,
            "relevant_items": list(self.relevant_items),
            "noise_std": self.noise_std,
            "ruleset": self.rules.to_json_dict(),
            "seed": self.seed,
            "position_bias": self.position_bias,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SimulationConfig":
        return cls(
            n_rankings=int(data.get("n_rankings", 50_000)),
            n_items=int(data.get("n_items", 10)),
            stay_probability=float(data.get("stay_probability", 0.95)),
            relevant_items=tuple(data.get("relevant_items", (1, 2, 4, 7))),
            noise_std=float(data.get("noise_std", 1.0)),
            rules=RuleSet.from_json_dict(data["ruleset"]) if data.get("ruleset") else RuleSet(),
            seed=int(data.get("seed", 0)),
            position_bias=data.get("position_bias", "inverse_rank"),
        )


@dataclass(frozen=True)
class Context:
    """Per-impression item features, scores and realized relevance."""

    features: np.ndarray  # (n, n): one-hot plus noise
    scores: np.ndarray  # (n,)
    relevance: np.ndarray  # (n,) 0/1


def generate_context(config: SimulationConfig, rng: np.random.Generator) -> Context:
    """Draw one context: u_j = e_j + noise, score_j = u_j . v_j."""
    n = config.n_items
    features = np.eye(n) + config.noise_std * rng.standard_normal((n, n))
    scores = config.relevance_signs() * features.sum(axis=1)
    return Context(features=features, scores=scores, relevance=(scores > 0).astype(float))


def _score_batch(config: SimulationConfig, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    noise_row_sums = config.noise_std * rng.standard_normal((size, config.n_items, config.n_items)).sum(axis=2)
    scores = config.relevance_signs()[None, :] * (1.0 + noise_row_sums)
    return scores, (scores > 0).astype(float)


def rank_by_score(scores: np.ndarray) -> np.ndarray:
    """Items sorted by descending score, ties by ascending item index."""
    return np.argsort(-scores, axis=1, kind="stable").astype(np.int64)


def simulate_log(
    config: SimulationConfig,
    context: Context,
    decomposition: BvnDecomposition,
    rules: RuleSet,
    rng: np.random.Generator,
    context_id: int = 0,
) -> ObservationLog:
    """Reference single-impression path (the batch path is equivalent)."""
    ranker = Ranking(rank_by_score(context.scores[None, :])[0])
    permutation, component = sample(decomposition, rng)
    randomized = apply_permutation(ranker, permutation)
    displayed, _ = apply_stochastic(rules, randomized, rng)
    bias = config.bias_curve()
    u_clicks = rng.random(config.n_items)
    clicks = tuple(
        int(u_clicks[k] < bias[k] * context.relevance[item])
        for k, item in enumerate(displayed.items)
    )
    return ObservationLog(
        context_id=context_id,
        ranker_ranking=ranker,
        sampled_component=component,
        displayed_ranking=displayed,
        clicks=clicks,
    )


def randomize_and_rule(
    ranker_rankings: np.ndarray,
    decomposition: BvnDecomposition,
    rules: RuleSet,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Batch randomization + rule pass: (sampled components, displayed)."""
    size, n = ranker_rankings.shape
    rules.validate_for(n)
    perms = decomposition.permutation_array()
    components = sample_component_indices(decomposition.probabilities, rng.random(size))
    prerule = np.empty((size, n), dtype=np.int64)
    np.put_along_axis(prerule, perms[components], ranker_rankings, axis=1)
    displayed, _ = _kernels.apply_pin_rules_batch(
        prerule,
        rules.item_array(),
        rules.target_array_0based(),
        rules.probability_array(),
        rng.random((size, len(rules))),
    )
    return components, displayed


def simulate_dataset(
    config: SimulationConfig,
    decomposition: BvnDecomposition | None = None,
    rng: np.random.Generator | None = None,
) -> LogDataset:
    """Generate the full synthetic dataset described by ``config``."""
    if decomposition is None:
        decomposition = decompose(config.propensity_matrix())
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n = config.n_items
    bias = config.bias_curve()
    rankers, components, displayeds, clicks = [], [], [], []
    remaining = config.n_rankings
    while remaining > 0:
        size = min(_CHUNK, remaining)
        scores, relevance = _score_batch(config, size, rng)
        ranker = rank_by_score(scores)
        comp, displayed = randomize_and_rule(ranker, decomposition, config.rules, rng)
        click = _kernels.bernoulli_clicks_batch(displayed, relevance, bias, rng.random((size, n)))
        rankers.append(ranker)
        components.append(comp)
        displayeds.append(displayed)
        clicks.append(click)
        remaining -= size
    return LogDataset(
        ranker_rankings=np.concatenate(rankers),
        sampled_components=np.concatenate(components).astype(np.int64),
        displayed_rankings=np.concatenate(displayeds),
        clicks=np.concatenate(clicks),
        decomposition=decomposition,
        rules=config.rules,
        config=config.to_json_dict(),
    )


def simulate_fixed_context(
    config: SimulationConfig,
    context: Context,
    decomposition: BvnDecomposition,
    rules: RuleSet,
    n_logs: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Displayed rankings for many impressions of one fixed context."""
    ranker = rank_by_score(context.scores[None, :])
    displayed_all = np.empty((n_logs, config.n_items), dtype=np.int64)
    done = 0
    while done < n_logs:
        size = min(_CHUNK, n_logs - done)
        _, displayed = randomize_and_rule(
            np.broadcast_to(ranker[0], (size, config.n_items)).copy(), decomposition, rules, rng
        )
        displayed_all[done : done + size] = displayed
        done += size
    return displayed_all


@dataclass(frozen=True)
class OracleValue:
    """On-policy ground truth: expected clicks per ranking and its MC error."""

    value: float
    std_error: float
    n_samples: int


def oracle_on_policy_value(
    config: SimulationConfig,
    target: TargetPolicy,
    n_samples: int,
    rng: np.random.Generator,
) -> OracleValue:
    """Monte Carlo value of showing the target's rankings directly.

    No randomization and no rules are applied. Per sampled context the
    click expectation is computed analytically (sum of bias * relevance
    over positions), which estimates the same mean as drawing Bernoulli
    clicks but with strictly smaller variance.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    bias = config.bias_curve()
    total = 0.0
    total_sq = 0.0
    remaining = n_samples
    while remaining > 0:
        size = min(_CHUNK, remaining)
        scores, relevance = _score_batch(config, size, rng)
        rankings = target.rank_items(scores)
        per_context = (np.take_along_axis(relevance, rankings, axis=1) * bias[None, :]).sum(axis=1)
        total += float(per_context.sum())
        total_sq += float((per_context**2).sum())
        remaining -= size
    mean = total / n_samples
    var = max(total_sq / n_samples - mean**2, 0.0)
    se = float(np.sqrt(var / n_samples))
    return OracleValue(value=mean, std_error=se, n_samples=n_samples)
