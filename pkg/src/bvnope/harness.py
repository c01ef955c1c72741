"""Experiment pipeline: simulate, fit the bias curve, correct, estimate.

``run_experiment`` executes one named setting across its seeds and
writes a summary CSV (fixed header) plus a JSON bundle per seed;
``run_grid`` maps that over a list of settings, continuing past per-cell
failures. The grid of the reference study (low/high-relevance item
pinned to the first/last position, crossed with four pin/correction
probability cells) is available from :func:`appendix_grid`.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .correction import PropensityModel, check_full_support
from .estimators import (
    EstimateResult,
    EstimatorSpec,
    FullSupportViolation,
    PositionBiasCurve,
    estimate,
)
from .logs import LogDataset
from .policies import FixedTargetPolicy, TargetPolicy, reference_target_policy
from .position_bias import SgdConfig, fit_position_bias, harvest_interventions
from .rankings import Ranking
from .rules import PinRule, RuleSet
from .simulator import OracleValue, SimulationConfig, oracle_on_policy_value, simulate_dataset

logger = logging.getLogger("bvnope")

SUMMARY_HEADER = ["cell", "estimator", "seed", "mean", "se", "ci_low", "ci_high", "oracle", "covered"]

DEFAULT_ESTIMATORS = ("pbm", "ipm", "interpol:1", "interpol:3")
DEFAULT_SEEDS = tuple(range(10))


@dataclass(frozen=True)
class PinSetting:
    """Which item gets pinned where, and how often it actually fires.

    ``item`` is an index or one of "low-relevance" / "high-relevance"
    (lowest-index irrelevant item / highest-index relevant item).
    """

    item: int | str
    target_position: int = 1
    probability: float = 0.95

    def resolve_item(self, config: SimulationConfig) -> int:
        if isinstance(self.item, int):
            return self.item
        relevant = set(config.relevant_items)
        if self.item == "low-relevance":
            return min(j for j in range(config.n_items) if j not in relevant)
        if self.item == "high-relevance":
            return max(relevant)
        raise ValueError(f"cannot resolve pinned item {self.item!r}")

    def ruleset(self, config: SimulationConfig, probability: float | None = None) -> RuleSet:
        p = self.probability if probability is None else probability
        return RuleSet((PinRule(self.resolve_item(config), self.target_position, p),))


@dataclass(frozen=True)
class ExperimentSpec:
    """One cell of the experiment grid, run over several seeds."""

    name: str
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    pin: PinSetting | None = None
    correction: str = "none"  # "none" | "exact" | "stochastic" | "mc"
    assumed_pin_probability: float | None = None  # None: correct with the actual probability
    estimators: tuple[str, ...] = DEFAULT_ESTIMATORS
    lambda_kind: str = "unit"
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    mc_samples: int = 100_000
    curve_fit_rankings: int | None = None  # None: same size as the evaluation log
    curve_source: str = "fit"  # "fit" | "true"
    sgd: SgdConfig = field(default_factory=SgdConfig)
    oracle_samples: int = 1_000_000
    target_ranking: tuple[int, ...] | None = None  # None: the reference target

    def __post_init__(self):
        if self.correction not in ("none", "exact", "stochastic", "mc"):
            raise ValueError(f"unknown correction mode {self.correction!r}")
        if self.correction == "exact" and self.pin is not None:
            effective = (
                self.pin.probability
                if self.assumed_pin_probability is None
                else self.assumed_pin_probability
            )
            if effective != 1.0:
                raise ValueError("exact correction requires pin probability 1.0")

    def target_policy(self) -> TargetPolicy:
        if self.target_ranking is not None:
            return FixedTargetPolicy(Ranking(self.target_ranking), name="fixed")
        return reference_target_policy(self.simulation.n_items)

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "simulation": self.simulation.to_json_dict(),
            "correction": self.correction,
            "assumed_pin_probability": self.assumed_pin_probability,
            "estimators": list(self.estimators),
            "lambda_kind": self.lambda_kind,
            "seeds": list(self.seeds),
            "mc_samples": self.mc_samples,
            "curve_fit_rankings": self.curve_fit_rankings,
            "curve_source": self.curve_source,
            "oracle_samples": self.oracle_samples,
            "target_ranking": list(self.target_ranking) if self.target_ranking else None,
        }
        if self.pin is not None:
            out["pin"] = {
                "item": self.pin.item,
                "target_position": self.pin.target_position,
                "probability": self.pin.probability,
            }
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExperimentSpec":
        pin = None
        if data.get("pin"):
            pin = PinSetting(
                item=data["pin"]["item"],
                target_position=int(data["pin"].get("target_position", 1)),
                probability=float(data["pin"].get("probability", 0.95)),
            )
        sim = SimulationConfig.from_json_dict(data.get("simulation", {}))
        return cls(
            name=data["name"],
            simulation=sim,
            pin=pin,
            correction=data.get("correction", "none"),
            assumed_pin_probability=data.get("assumed_pin_probability"),
            estimators=tuple(data.get("estimators", DEFAULT_ESTIMATORS)),
            lambda_kind=data.get("lambda_kind", "unit"),
            seeds=tuple(data.get("seeds", DEFAULT_SEEDS)),
            mc_samples=int(data.get("mc_samples", 100_000)),
            curve_fit_rankings=data.get("curve_fit_rankings"),
            curve_source=data.get("curve_source", "fit"),
            oracle_samples=int(data.get("oracle_samples", 1_000_000)),
            target_ranking=tuple(data["target_ranking"]) if data.get("target_ranking") else None,
        )


@dataclass
class SeedOutcome:
    seed: int
    estimates: dict[str, EstimateResult | None]
    curve: PositionBiasCurve
    violations: dict[str, list[tuple[int, int]]]
    support_pairs: list[tuple[int, int]]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    oracle: OracleValue
    outcomes: list[SeedOutcome]

    def rows(self) -> list[dict]:
        out = []
        for outcome in self.outcomes:
            for name, res in outcome.estimates.items():
                row = {
                    "cell": self.spec.name,
                    "estimator": name,
                    "seed": outcome.seed,
                    "mean": "" if res is None else f"{res.mean:.10g}",
                    "se": "" if res is None else f"{res.std_error:.10g}",
                    "ci_low": "" if res is None else f"{res.ci_low:.10g}",
                    "ci_high": "" if res is None else f"{res.ci_high:.10g}",
                    "oracle": f"{self.oracle.value:.10g}",
                    "covered": "" if res is None else str(res.covers(self.oracle.value)).lower(),
                }
                out.append(row)
        return out

    def coverage_count(self, estimator: str) -> tuple[int, int]:
        """(covered seeds, non-failed seeds) for one estimator label."""
        covered = total = 0
        for outcome in self.outcomes:
            res = outcome.estimates.get(estimator)
            if res is None:
                continue
            total += 1
            covered += int(res.covers(self.oracle.value))
        return covered, total


def _curve_for_run(spec: ExperimentSpec, dataset: LogDataset, seed: int) -> PositionBiasCurve:
    """Bias curve per the pipeline rules.

    Corrected modes estimate the curve in a randomization-only phase (no
    rules active), mirroring a pipeline that measures propensities and
    biases before post-processing is switched on; uncorrected runs use
    the displayed logs as they are, distortions included.
    """
    n = spec.simulation.n_items
    if spec.curve_source == "true":
        bias = spec.simulation.bias_curve()
        return PositionBiasCurve.from_array(bias / bias[0])
    rules_active = len(dataset.rules) > 0
    if spec.correction == "none" and rules_active:
        # uncorrected runs see the world as it is: distorted logs included
        counts = harvest_interventions(dataset)
    elif spec.correction == "none" and spec.curve_fit_rankings is None:
        counts = harvest_interventions(dataset)
    else:
        fit_n = spec.curve_fit_rankings or spec.simulation.n_rankings
        phase_seed = int(np.random.SeedSequence(entropy=seed, spawn_key=(101,)).generate_state(1)[0])
        phase_config = replace(spec.simulation, rules=RuleSet(), n_rankings=fit_n, seed=phase_seed)
        phase = simulate_dataset(phase_config, decomposition=dataset.decomposition)
        counts = harvest_interventions(phase)
    return fit_position_bias(counts, n, spec.sgd)


def run_seed(spec: ExperimentSpec, seed: int) -> SeedOutcome:
    """Simulate and estimate one seed of an experiment cell."""
    config = spec.simulation
    actual_rules = spec.pin.ruleset(config) if spec.pin else RuleSet()
    sim_config = replace(config, rules=actual_rules, seed=seed)
    dataset = simulate_dataset(sim_config)

    curve = _curve_for_run(spec, dataset, seed)

    if spec.correction == "none":
        assumed_rules = RuleSet()
        mode = "raw"
    else:
        assumed_rules = (
            spec.pin.ruleset(config, probability=spec.assumed_pin_probability)
            if spec.pin
            else RuleSet()
        )
        mode = spec.correction
    model = PropensityModel(
        dataset.decomposition, rules=assumed_rules, mode=mode, mc_samples=spec.mc_samples, seed=seed
    )

    target = spec.target_policy()
    # support diagnostics on a representative context (the first log)
    first_base = Ranking(dataset.ranker_rankings[0])
    first_target = Ranking(target.rankings_for_logs(dataset.ranker_rankings[:1])[0])
    support_pairs = check_full_support(model.matrix_for(first_base), first_target)

    estimates: dict[str, EstimateResult | None] = {}
    violations: dict[str, list[tuple[int, int]]] = {}
    for text in spec.estimators:
        est_spec = EstimatorSpec.parse(text, propensities=mode, mc_samples=spec.mc_samples)
        try:
            estimates[est_spec.label] = estimate(
                dataset,
                target,
                est_spec,
                curve=curve,
                lambda_kind=spec.lambda_kind,
                rules=assumed_rules,
                model=model,
            )
        except FullSupportViolation as exc:
            logger.warning("%s seed %s %s: %s", spec.name, seed, est_spec.label, exc)
            estimates[est_spec.label] = None
            violations[est_spec.label] = [(exc.item, exc.position)]
    return SeedOutcome(
        seed=seed, estimates=estimates, curve=curve, violations=violations, support_pairs=support_pairs
    )


def run_experiment(
    spec: ExperimentSpec,
    out_dir: str | Path | None = None,
    oracle: OracleValue | None = None,
) -> ExperimentResult:
    """Run all seeds of one cell; optionally write CSV/JSON artifacts."""
    if oracle is None:
        oracle = compute_oracle(spec)
    outcomes = [run_seed(spec, seed) for seed in spec.seeds]
    result = ExperimentResult(spec=spec, oracle=oracle, outcomes=outcomes)
    if out_dir is not None:
        write_experiment_artifacts(result, Path(out_dir))
    return result


def compute_oracle(spec: ExperimentSpec) -> OracleValue:
    """Ground-truth value of the spec's target under its click model."""
    oracle_seed = int(np.random.SeedSequence(entropy=spec.simulation.seed, spawn_key=(999,)).generate_state(1)[0])
    return oracle_on_policy_value(
        spec.simulation, spec.target_policy(), spec.oracle_samples, np.random.default_rng(oracle_seed)
    )


def write_summary_csv(rows: list[dict], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER)
        writer.writeheader()
        writer.writerows(rows)


def write_experiment_artifacts(result: ExperimentResult, out_dir: Path) -> None:
    cell_dir = out_dir / result.spec.name
    cell_dir.mkdir(parents=True, exist_ok=True)
    write_summary_csv(result.rows(), cell_dir / "summary.csv")
    bundle = {
        "spec": result.spec.to_json_dict(),
        "oracle": {
            "value": result.oracle.value,
            "std_error": result.oracle.std_error,
            "n_samples": result.oracle.n_samples,
        },
        "seeds": [
            {
                "seed": outcome.seed,
                "curve": outcome.curve.to_json_list(),
                "support_violations": outcome.support_pairs,
                "rule_violations": outcome.violations,
                "estimates": {
                    name: None if res is None else res.to_json_dict(include_per_observation=False)
                    for name, res in outcome.estimates.items()
                },
            }
            for outcome in result.outcomes
        ],
    }
    (cell_dir / "bundle.json").write_text(json.dumps(bundle, indent=2))
    curves_dir = cell_dir / "curves"
    curves_dir.mkdir(exist_ok=True)
    for outcome in result.outcomes:
        (curves_dir / f"seed{outcome.seed}.json").write_text(json.dumps(outcome.curve.to_json_list()))


def _run_spec_for_grid(args: tuple[ExperimentSpec, str]) -> tuple[str, list[dict], str]:
    spec, out_dir = args
    try:
        result = run_experiment(spec, out_dir=out_dir)
        return spec.name, result.rows(), ""
    except Exception as exc:  # cell failures must not kill the grid
        logger.exception("cell %s failed", spec.name)
        return spec.name, [], f"{type(exc).__name__}: {exc}"


def run_grid(
    specs: Sequence[ExperimentSpec],
    out_dir: str | Path,
    workers: int = 1,
) -> Path:
    """Run every cell, writing per-cell artifacts and a combined summary.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(spec, str(out_dir)) for spec in specs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_spec_for_grid, jobs))
    else:
        results = [_run_spec_for_grid(job) for job in jobs]
    all_rows: list[dict] = []
    failures: dict[str, str] = {}
    for name, rows, error in results:
        all_rows.extend(rows)
        if error:
            failures[name] = error
    summary = out_dir / "summary.csv"
    write_summary_csv(all_rows, summary)
    if failures:
        (out_dir / "failures.json").write_text(json.dumps(failures, indent=2))
    return summary


def appendix_grid(
    base: SimulationConfig | None = None,
    seeds: tuple[int, ...] = DEFAULT_SEEDS,
    **spec_overrides,
) -> list[ExperimentSpec]:
    """The 4x4 follow-up grid: pinned item and position crossed with
    actual/assumed pin probability cells."""
    base = base or SimulationConfig()
    specs = []
    cells = [
        ("p100-nocorr", 1.0, None, "none"),
        ("p95-nocorr", 0.95, None, "none"),
        ("p100-corr95", 1.0, 0.95, "stochastic"),
        ("p95-corr95", 0.95, 0.95, "stochastic"),
    ]
    for selector in ("low-relevance", "high-relevance"):
        for position, pos_name in ((1, "first"), (base.n_items, "last")):
            for cell_name, actual, assumed, correction in cells:
                specs.append(
                    ExperimentSpec(
                        name=f"{selector.split('-')[0]}-{pos_name}-{cell_name}",
                        simulation=base,
                        pin=PinSetting(selector, position, actual),
                        correction=correction,
                        assumed_pin_probability=assumed,
                        seeds=seeds,
                        **spec_overrides,
                    )
                )
    return specs


def figure_panels(
    base: SimulationConfig | None = None,
    seeds: tuple[int, ...] = DEFAULT_SEEDS,
    **spec_overrides,
) -> list[ExperimentSpec]:
    """The three headline panels: no pin, pin without correction, pin with
    power-set correction."""
    base = base or SimulationConfig()
    pin = PinSetting("low-relevance", 1, 0.95)
    return [
        ExperimentSpec(name="no-pin", simulation=base, pin=None, correction="none", seeds=seeds, **spec_overrides),
        ExperimentSpec(name="pin-nocorr", simulation=base, pin=pin, correction="none", seeds=seeds, **spec_overrides),
        ExperimentSpec(name="pin-corrected", simulation=base, pin=pin, correction="stochastic", seeds=seeds, **spec_overrides),
    ]
