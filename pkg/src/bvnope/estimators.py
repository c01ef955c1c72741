"""Reward estimators for offline evaluation of a deterministic target policy.

Every estimator computes, per observation, a weighted sum of per-item
click rewards: weight(item) * discount(target position) * click. They
differ only in the weight:

- PBM: ratio of position biases, target position over displayed position.
- IPM: indicator that the displayed position equals the target position,
  divided by the (corrected) propensity of that item/position pair.
- INTERPOL: positions are split into contiguous windows; within the
  target's window a bias ratio is used, across windows an indicator over
  the window's total propensity. Window size 1 is exactly IPM, window
  size n is exactly PBM.

The displayed (post-rule) position feeds the indicators and bias
denominators, while propensities come from a corrected matrix; pairing
those two is what keeps the estimates unbiased when rules rearranged the
displayed rankings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bvn import BvnDecomposition
from .correction import PropensityModel
from .logs import LogDataset, ObservationLog
from .policies import TargetPolicy
from .rankings import DoublyStochasticMatrix
from .rules import RuleSet

LAMBDA_KINDS = ("unit", "dcg", "dcg_base2")
Z_95 = 1.96


class FullSupportViolation(RuntimeError):
    """An item was displayed at a position the propensity model gives no mass."""

    def __init__(self, item: int, position: int):
        super().__init__(
            f"full-support violation: item {item} at position {position} has zero propensity"
        )
        self.item = item
        self.position = position


@dataclass(frozen=True)
class PositionBiasCurve:
    """Examination probability per 1-based position, anchored at b(1) = 1."""

    values: tuple[float, ...]

    def __init__(self, values: Sequence[float]):
        values = tuple(float(v) for v in values)
        if not values:
            raise ValueError("empty curve")
        if any(v <= 0 for v in values):
            raise ValueError("position biases must be strictly positive")
        if abs(values[0] - 1.0) > 1e-12:
            raise ValueError(f"curve must be anchored at b(1)=1, got {values[0]}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def at(self, position: int) -> float:
        """Bias at a 1-based position."""
        if position < 1 or position > len(self.values):
            raise ValueError(f"position {position} out of range 1..{len(self.values)}")
        return self.values[position - 1]

    def to_array(self) -> np.ndarray:
        return np.asarray(self.values)

    def to_json_list(self) -> list[float]:
        return list(self.values)

    @classmethod
    def inverse_rank(cls, n: int) -> "PositionBiasCurve":
        return cls(tuple(1.0 / k for k in range(1, n + 1)))

    @classmethod
    def flat(cls, n: int) -> "PositionBiasCurve":
        return cls((1.0,) * n)

    @classmethod
    def from_array(cls, values) -> "PositionBiasCurve":
        return cls(tuple(float(v) for v in values))


def lambda_weight(kind: str, position: int) -> float:
    """Positional metric discount at a 1-based position."""
    if position < 1:
        raise ValueError(f"position is 1-based, got {position}")
    if kind == "unit":
        return 1.0
    if kind == "dcg":
        return 1.0 / math.log(1 + position)
    if kind == "dcg_base2":
        return 1.0 / math.log2(1 + position)
    raise ValueError(f"unknown lambda kind {kind!r}, expected one of {LAMBDA_KINDS}")


def _lambda_array(kind, n: int) -> np.ndarray:
    """Named discount kind, or a caller-supplied per-position array."""
    if isinstance(kind, str):
        return np.asarray([lambda_weight(kind, j) for j in range(1, n + 1)])
    arr = np.asarray(kind, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"custom lambda must have length {n}, got shape {arr.shape}")
    return arr


def pbm_weight(curve: PositionBiasCurve, target_rank: int, logged_rank: int) -> float:
    """Position-bias ratio, target rank over logged (displayed) rank."""
    return curve.at(target_rank) / curve.at(logged_rank)


def _entries(p_corrected) -> np.ndarray:
    if isinstance(p_corrected, DoublyStochasticMatrix):
        return p_corrected.entries
    return np.asarray(p_corrected, dtype=float)


def ipm_weight(p_corrected, item: int, target_rank: int, displayed_rank: int) -> float:
    """Inverse propensity of the item sitting at the target position.

    Zero whenever the displayed rank differs from the target rank; raises
    :class:`FullSupportViolation` when the ranks match but the corrected
    propensity carries no mass there.
    """
    if displayed_rank != target_rank:
        return 0.0
    propensity = _entries(p_corrected)[item, target_rank - 1]
    if propensity <= 0.0:
        raise FullSupportViolation(item, target_rank)
    return 1.0 / propensity


def interpol_weight(
    curve: PositionBiasCurve,
    p_corrected,
    window_size: int,
    item: int,
    target_rank: int,
    displayed_rank: int,
) -> float:
    """Windowed blend of PBM and IPM weights.

    Positions are partitioned into contiguous windows of ``window_size``
    (the last window may be short). The weight is nonzero only when the
    displayed rank falls in the target rank's window.
    """
    n = len(curve)
    if not 1 <= window_size <= n:
        raise ValueError(f"window size must be in 1..{n}, got {window_size}")
    if (target_rank - 1) // window_size != (displayed_rank - 1) // window_size:
        return 0.0
    window = (target_rank - 1) // window_size
    lo = window * window_size
    hi = min(lo + window_size, n)
    mass = float(_entries(p_corrected)[item, lo:hi].sum())
    if mass <= 0.0:
        raise FullSupportViolation(item, target_rank)
    return curve.at(target_rank) / curve.at(displayed_rank) / mass


@dataclass(frozen=True)
class EstimatorSpec:
    """Which weighting to use and which propensities feed it."""

    kind: str  # "pbm" | "ipm" | "interpol"
    window: int = 1
    propensities: str = "stochastic"  # "raw" | "exact" | "stochastic" | "mc"
    mc_samples: int = 100_000

    def __post_init__(self):
        if self.kind not in ("pbm", "ipm", "interpol"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "interpol" and self.window < 1:
            raise ValueError("interpol window must be >= 1")

    @property
    def label(self) -> str:
        if self.kind == "interpol":
            return f"interpol({self.window})"
        return self.kind

    @classmethod
    def parse(cls, text: str, propensities: str = "stochastic", mc_samples: int = 100_000) -> "EstimatorSpec":
        """Parse "pbm", "ipm" or "interpol:W" (also accepts "interpol(W)")."""
        text = text.strip().lower()
        if text in ("pbm", "ipm"):
            return cls(kind=text, propensities=propensities, mc_samples=mc_samples)
        for prefix in ("interpol:", "interpol("):
            if text.startswith(prefix):
                window = int(text[len(prefix) :].rstrip(")"))
                return cls(kind="interpol", window=window, propensities=propensities, mc_samples=mc_samples)
        raise ValueError(f"cannot parse estimator {text!r}")


@dataclass(frozen=True)
class EstimateResult:
    """Aggregated estimate with a 95% normal confidence interval."""

    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    per_observation: np.ndarray = field(repr=False)
    estimator_name: str = ""
    n_observations: int = 0

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    def to_json_dict(self, include_per_observation: bool = True) -> dict:
        out = {
            "mean": self.mean,
            "std_error": self.std_error,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "estimator_name": self.estimator_name,
            "n_observations": self.n_observations,
        }
        if include_per_observation:
            out["per_observation"] = self.per_observation.tolist()
        return out


def _aggregate(per_obs: np.ndarray, name: str) -> EstimateResult:
    n = per_obs.shape[0]
    mean = float(np.mean(per_obs))
    se = float(np.std(per_obs, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return EstimateResult(
        mean=mean,
        std_error=se,
        ci_low=mean - Z_95 * se,
        ci_high=mean + Z_95 * se,
        per_observation=per_obs,
        estimator_name=name,
        n_observations=n,
    )


def _inverse_rankings(rankings: np.ndarray) -> np.ndarray:
    n_logs, n = rankings.shape
    inv = np.empty_like(rankings)
    np.put_along_axis(inv, rankings, np.broadcast_to(np.arange(n, dtype=rankings.dtype), (n_logs, n)), axis=1)
    return inv


def _first_violation(mask: np.ndarray, positions0: np.ndarray) -> FullSupportViolation:
    log_idx, item = np.argwhere(mask)[0]
    return FullSupportViolation(int(item), int(positions0[log_idx, item]) + 1)


def estimate(
    logs: LogDataset | Sequence[ObservationLog],
    target: TargetPolicy,
    spec: EstimatorSpec,
    curve: PositionBiasCurve | None = None,
    lambda_kind: str | Sequence[float] = "unit",
    decomposition: BvnDecomposition | None = None,
    rules: RuleSet | None = None,
    model: PropensityModel | None = None,
) -> EstimateResult:
    """Estimate the target policy's expected reward from logged impressions.

    ``rules`` are the rules the correction should assume (defaulting to the
    dataset's logged rules); pass a :class:`PropensityModel` to share
    corrected matrices across estimator runs. PBM and INTERPOL require a
    position-bias ``curve``. Raises :class:`FullSupportViolation` when a
    needed weight divides by zero propensity and ``ValueError`` on empty
    logs.
    """
    if not isinstance(logs, LogDataset):
        logs = list(logs)
        if not logs:
            raise ValueError("no observations to estimate from")
        if decomposition is None:
            raise ValueError("decomposition required when passing raw logs")
        logs = LogDataset.from_logs(logs, decomposition, rules or RuleSet())
    if len(logs) == 0:
        raise ValueError("no observations to estimate from")

    n = logs.n_items
    ranker = logs.ranker_rankings
    target_rankings = target.rankings_for_logs(ranker)
    inv_target = _inverse_rankings(target_rankings)  # (N, n): 0-based target position by item
    inv_displayed = _inverse_rankings(logs.displayed_rankings)
    clicks_by_item = np.take_along_axis(logs.clicks.astype(float), inv_displayed, axis=1)
    lam = _lambda_array(lambda_kind, n)[inv_target]

    needs_curve = spec.kind in ("pbm", "interpol")
    if needs_curve and curve is None:
        raise ValueError(f"{spec.kind} needs a position-bias curve")
    if needs_curve and len(curve) != n:
        raise ValueError(f"curve length {len(curve)} != ranking length {n}")

    if spec.kind == "pbm":
        b = curve.to_array()
        weights = b[inv_target] / b[inv_displayed]
    else:
        if model is None:
            model = PropensityModel(
                logs.decomposition if decomposition is None else decomposition,
                rules=logs.rules if rules is None else rules,
                mode=spec.propensities,
                mc_samples=spec.mc_samples,
            )
        matrices = model.matrices_for_logs(ranker)  # (N, n, n) item-indexed
        if spec.kind == "ipm":
            match = inv_displayed == inv_target
            propensity = np.take_along_axis(matrices, inv_target[:, :, None], axis=2)[:, :, 0]
            bad = match & (propensity <= 0.0)
            if bad.any():
                raise _first_violation(bad, inv_target)
            weights = np.where(match, 1.0 / np.where(propensity > 0, propensity, 1.0), 0.0)
        else:
            window = spec.window
            if window > n:
                raise ValueError(f"interpol window {window} exceeds ranking length {n}")
            match = (inv_displayed // window) == (inv_target // window)
            starts = np.arange(0, n, window)
            window_mass = np.add.reduceat(matrices, starts, axis=2)  # (N, n, n_windows)
            mass = np.take_along_axis(window_mass, (inv_target // window)[:, :, None], axis=2)[:, :, 0]
            bad = match & (mass <= 0.0)
            if bad.any():
                raise _first_violation(bad, inv_target)
            b = curve.to_array()
            weights = np.where(match, (b[inv_target] / b[inv_displayed]) / np.where(mass > 0, mass, 1.0), 0.0)

    per_obs = (weights * lam * clicks_by_item).sum(axis=1)
    return _aggregate(per_obs, spec.label)
