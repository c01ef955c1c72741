"""Off-policy evaluation for rankings randomized via Birkhoff-von-Neumann
decompositions and post-processed by business rules.

The package covers the full pipeline: permutation/matrix algebra,
decomposition and sampling, pin rules, propensity correction (exact,
power-set and Monte Carlo), PBM/IPM/INTERPOL estimators, position-bias
fitting from randomized logs, a click simulator and an experiment
harness with the ``ope`` CLI.
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .bvn import BvnDecomposition, decompose, sample, stay_probability_matrix
from .correction import (
    BvnRankingSampler,
    PropensityModel,
    check_full_support,
    correct_exact,
    correct_mc,
    correct_stochastic,
)
from .estimators import (
    EstimateResult,
    EstimatorSpec,
    FullSupportViolation,
    PositionBiasCurve,
    estimate,
    interpol_weight,
    ipm_weight,
    lambda_weight,
    pbm_weight,
)
from .harness import ExperimentSpec, PinSetting, appendix_grid, figure_panels, run_experiment, run_grid
from .logs import LogDataset, ObservationLog
from .policies import FixedTargetPolicy, RankerTargetPolicy, TargetPolicy, reference_target_policy
from .position_bias import InterventionCounts, SgdConfig, fit_position_bias, harvest_interventions
from .rankings import (
    DoublyStochasticMatrix,
    Permutation,
    Ranking,
    apply_permutation,
    check_doubly_stochastic,
    compose,
)
from .rules import PinRule, RuleSet, apply_stochastic, rule_permutation, subset_probability
from .simulator import (
    Context,
    OracleValue,
    SimulationConfig,
    generate_context,
    oracle_on_policy_value,
    simulate_dataset,
    simulate_log,
)

__version__ = "0.1.0"

__all__ = [
    "BvnDecomposition",
    "BvnRankingSampler",
    "Context",
    "DoublyStochasticMatrix",
    "EstimateResult",
    "EstimatorSpec",
    "ExperimentSpec",
    "FixedTargetPolicy",
    "FullSupportViolation",
    "InterventionCounts",
    "KERNEL_BACKEND",
    "LogDataset",
    "ObservationLog",
    "OracleValue",
    "Permutation",
    "PinRule",
    "PinSetting",
    "PositionBiasCurve",
    "PropensityModel",
    "Ranking",
    "RankerTargetPolicy",
    "RuleSet",
    "SgdConfig",
    "SimulationConfig",
    "TargetPolicy",
    "apply_permutation",
    "apply_stochastic",
    "appendix_grid",
    "check_doubly_stochastic",
    "check_full_support",
    "compose",
    "correct_exact",
    "correct_mc",
    "correct_stochastic",
    "decompose",
    "estimate",
    "figure_panels",
    "fit_position_bias",
    "generate_context",
    "harvest_interventions",
    "interpol_weight",
    "ipm_weight",
    "lambda_weight",
    "oracle_on_policy_value",
    "pbm_weight",
    "reference_target_policy",
    "rule_permutation",
    "run_experiment",
    "run_grid",
    "sample",
    "simulate_dataset",
    "simulate_log",
    "stay_probability_matrix",
    "subset_probability",
]
