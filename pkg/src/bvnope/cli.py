"""``ope`` command line: simulate, correct, estimate, run, grid.

Set OPE_LOG_LEVEL (debug/info/warning/...) to control verbosity.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .correction import BvnRankingSampler, correct_exact, correct_mc, correct_stochastic
from .estimators import EstimatorSpec, FullSupportViolation, PositionBiasCurve, estimate
from .harness import (
    ExperimentSpec,
    SUMMARY_HEADER,
    appendix_grid,
    figure_panels,
    run_experiment,
    run_grid,
)
from .logs import LogDataset
from .policies import FixedTargetPolicy
from .position_bias import fit_position_bias, harvest_interventions
from .rankings import Ranking
from .rules import RuleSet
from .simulator import SimulationConfig, simulate_dataset

logger = logging.getLogger("bvnope")


def _parse_ranking(text: str) -> Ranking:
    return Ranking([int(tok) for tok in text.replace(",", " ").split()])


def _load_config(path: str) -> dict:
    return json.loads(Path(path).read_text())


def cmd_simulate(args) -> int:
    config = SimulationConfig.from_json_dict(_load_config(args.config)) if args.config else SimulationConfig()
    if args.seed is not None:
        config = SimulationConfig.from_json_dict({**config.to_json_dict(), "seed": args.seed})
    dataset = simulate_dataset(config)
    path = dataset.write(args.out, compress=args.gzip)
    logger.info("wrote %d logs to %s", len(dataset), path)
    print(path)
    return 0


def cmd_correct(args) -> int:
    dataset_dir = Path(args.logs)
    sidecar = json.loads((dataset_dir / "sidecar.json").read_text())
    from .bvn import BvnDecomposition

    decomposition = BvnDecomposition.from_json_dict(sidecar["decomposition"])
    rules = RuleSet.from_json_dict(sidecar["ruleset"])
    if args.assumed_prob is not None:
        rules = rules.with_probability(args.assumed_prob)
    base = _parse_ranking(args.ranking) if args.ranking else Ranking.identity(decomposition.n)
    if args.mode == "exact":
        matrix = correct_exact(base, decomposition, rules)
    elif args.mode == "stochastic":
        matrix = correct_stochastic(base, decomposition, rules)
    else:
        rng = np.random.default_rng(args.seed or 0)
        matrix = correct_mc(BvnRankingSampler(base, decomposition), rules, args.mc_samples, rng)
    payload = matrix.to_json_dict(kind="corrected")
    out = Path(args.out)
    out.write_text(json.dumps(payload, indent=2))
    print(out)
    return 0


def cmd_estimate(args) -> int:
    dataset = LogDataset.read(args.logs)
    target = FixedTargetPolicy(_parse_ranking(args.target)) if args.target else None
    if target is None:
        from .policies import reference_target_policy

        target = reference_target_policy(dataset.n_items)
    mode = args.correction
    rules = dataset.rules
    if args.assumed_prob is not None:
        rules = rules.with_probability(args.assumed_prob)
    if args.curve == "fit":
        curve = fit_position_bias(harvest_interventions(dataset), dataset.n_items)
    elif args.curve == "true":
        curve = PositionBiasCurve.inverse_rank(dataset.n_items)
    else:
        curve = PositionBiasCurve.from_array(json.loads(Path(args.curve).read_text()))
    results = {}
    exit_code = 0
    for text in args.estimators.split(","):
        spec = EstimatorSpec.parse(text, propensities="raw" if mode == "none" else mode, mc_samples=args.mc_samples)
        try:
            res = estimate(dataset, target, spec, curve=curve, lambda_kind=args.lambda_kind,
                           rules=RuleSet() if mode == "none" else rules)
            results[spec.label] = res.to_json_dict(include_per_observation=False)
        except FullSupportViolation as exc:
            results[spec.label] = {"error": str(exc), "item": exc.item, "position": exc.position}
            if not args.allow_violations:
                exit_code = 2
    text_out = json.dumps(results, indent=2)
    if args.out:
        Path(args.out).write_text(text_out)
        print(args.out)
    else:
        print(text_out)
    return exit_code


def cmd_run(args) -> int:
    spec = ExperimentSpec.from_json_dict(_load_config(args.config))
    if args.seed is not None:
        spec = ExperimentSpec.from_json_dict({**spec.to_json_dict(), "seeds": [args.seed]})
    result = run_experiment(spec, out_dir=args.out)
    rows = result.rows()
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        for row in rows:
            print(",".join(str(row[c]) for c in SUMMARY_HEADER))
    had_violation = any(outcome.violations for outcome in result.outcomes)
    if had_violation and not args.allow_violations:
        logger.error("full-support violations encountered; rerun with --allow-violations to ignore")
        return 2
    return 0


def cmd_grid(args) -> int:
    if args.builtin == "appendix":
        specs = appendix_grid()
    elif args.builtin == "figure1":
        specs = figure_panels()
    else:
        data = _load_config(args.config)
        specs = [ExperimentSpec.from_json_dict(d) for d in data["specs"]]
    summary = run_grid(specs, args.out, workers=args.workers)
    print(summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ope", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic click log")
    p.add_argument("--config", help="SimulationConfig JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--gzip", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("correct", help="corrected propensity matrix for one base ranking")
    p.add_argument("--logs", required=True, help="dataset directory (uses its sidecar)")
    p.add_argument("--ranking", help="base ranking, e.g. '3,1,0,2' (default: identity)")
    p.add_argument("--mode", choices=["exact", "stochastic", "mc"], default="stochastic")
    p.add_argument("--assumed-prob", type=float, help="override rule probabilities")
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("estimate", help="run estimators over a stored log")
    p.add_argument("--logs", required=True)
    p.add_argument("--target", help="target ranking items, e.g. '7,0,3,1,...' (default: reference policy)")
    p.add_argument("--estimators", default="pbm,ipm,interpol:1,interpol:3")
    p.add_argument("--correction", choices=["none", "exact", "stochastic", "mc"], default="stochastic")
    p.add_argument("--assumed-prob", type=float)
    p.add_argument("--curve", default="fit", help="'fit', 'true', or path to a curve JSON")
    p.add_argument("--lambda", dest="lambda_kind", choices=["unit", "dcg", "dcg_base2"], default="unit")
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--allow-violations", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("run", help="run one experiment spec end to end")
    p.add_argument("--config", required=True, help="ExperimentSpec JSON")
    p.add_argument("--seed", type=int, help="run a single seed instead of the spec's list")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--allow-violations", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid", help="run a grid of experiment specs")
    p.add_argument("--config", help="JSON with {'specs': [...]}")
    p.add_argument("--builtin", choices=["appendix", "figure1"], help="use a built-in grid")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_grid)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("OPE_LOG_LEVEL", "WARNING").upper())
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
