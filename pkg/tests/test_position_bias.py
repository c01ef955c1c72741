import numpy as np
import pytest

from bvnope.logs import ObservationLog
from bvnope.position_bias import (
    InterventionCounts,
    SgdConfig,
    fit_position_bias,
    harvest_interventions,
)
from bvnope.rankings import Ranking
from bvnope.simulator import SimulationConfig, simulate_dataset

TRUE_CURVE = 1.0 / np.arange(1, 11)


def test_harvest_single_log():
    # the ranker is the identity here, so slot == item index
    log = ObservationLog(
        context_id=0,
        ranker_ranking=Ranking(range(5)),
        sampled_component=0,
        displayed_ranking=Ranking(range(5)),
        clicks=(1, 0, 0, 0, 0),
    )
    counts = harvest_interventions([log])
    assert counts.impressions[0, 0] == 1
    assert counts.clicks[0, 0] == 1
    assert counts.impressions.sum() == 5
    assert counts.clicks.sum() == 1


def test_harvest_batch_matches_scalar():
    dataset = simulate_dataset(SimulationConfig(n_rankings=300, seed=0))
    fast = harvest_interventions(dataset)
    slow = harvest_interventions(list(dataset))
    assert np.array_equal(fast.impressions, slow.impressions)
    assert np.array_equal(fast.clicks, slow.clicks)


def test_harvest_row_sums_equal_log_count():
    dataset = simulate_dataset(SimulationConfig(n_rankings=500, seed=1))
    counts = harvest_interventions(dataset)
    assert np.all(counts.impressions.sum(axis=1) == 500)
    assert np.all(counts.impressions.sum(axis=0) == 500)


def test_randomizer_moves_slots_five_percent():
    dataset = simulate_dataset(SimulationConfig(n_rankings=50_000, seed=2))
    counts = harvest_interventions(dataset)
    off_diagonal = 1.0 - np.diag(counts.impressions) / 50_000
    assert np.allclose(off_diagonal, 0.05, atol=0.005)


def test_fit_recovers_inverse_rank_curve():
    dataset = simulate_dataset(SimulationConfig(n_rankings=50_000, seed=3))
    curve = fit_position_bias(harvest_interventions(dataset), 10)
    rel_err = np.abs(curve.to_array() - TRUE_CURVE) / TRUE_CURVE
    assert rel_err.max() < 0.15


def test_fit_flat_curve_when_bias_is_flat():
    config = SimulationConfig(n_rankings=50_000, seed=4, position_bias="flat")
    curve = fit_position_bias(harvest_interventions(simulate_dataset(config)), 10)
    assert np.abs(curve.to_array() - 1.0).max() < 0.1


def test_fit_anchors_first_position_exactly():
    dataset = simulate_dataset(SimulationConfig(n_rankings=5000, seed=5))
    curve = fit_position_bias(harvest_interventions(dataset), 10)
    assert curve.at(1) == 1.0
    assert all(v > 0 for v in curve.values)


def test_fit_scale_invariance():
    """Doubling all click rates leaves the fitted curve unchanged (ratios)."""
    dataset = simulate_dataset(SimulationConfig(n_rankings=20_000, seed=6))
    counts = harvest_interventions(dataset)
    curve = fit_position_bias(counts, 10)
    scaled = InterventionCounts(counts.impressions * 2.0, counts.clicks * 2.0)
    curve_scaled = fit_position_bias(scaled, 10)
    assert np.abs(curve.to_array() - curve_scaled.to_array()).max() < 1e-6


def test_fit_deterministic():
    dataset = simulate_dataset(SimulationConfig(n_rankings=2000, seed=7))
    counts = harvest_interventions(dataset)
    a = fit_position_bias(counts, 10)
    b = fit_position_bias(counts, 10)
    assert a.values == b.values


def test_fit_rejects_unseen_position():
    impressions = np.ones((4, 4)) * 10
    clicks = np.ones((4, 4))
    impressions[:, 2] = 0  # position 3 never displayed
    with pytest.raises(ValueError, match="position 3"):
        fit_position_bias(InterventionCounts(impressions, clicks), 4)


def test_fit_converges_to_weighted_least_squares():
    """GD with the default schedule reaches the closed-form minimizer."""
    dataset = simulate_dataset(SimulationConfig(n_rankings=30_000, seed=8))
    counts = harvest_interventions(dataset)
    from bvnope.position_bias import _pair_data

    pos_a, pos_b, gaps, w = _pair_data(counts, "inverse-variance")
    design = np.zeros((len(gaps), 10))
    design[np.arange(len(gaps)), pos_a] = 1.0
    design[np.arange(len(gaps)), pos_b] = -1.0
    sw = np.sqrt(w / w.sum())
    theta, *_ = np.linalg.lstsq(design[:, 1:] * sw[:, None], gaps * sw, rcond=None)
    closed_form = np.exp(np.concatenate([[0.0], theta]))
    curve = fit_position_bias(counts, 10)
    assert np.abs(curve.to_array() - closed_form).max() < 1e-5


def test_min_impressions_weighting_runs():
    dataset = simulate_dataset(SimulationConfig(n_rankings=5000, seed=9))
    curve = fit_position_bias(
        harvest_interventions(dataset), 10, SgdConfig(weighting="min-impressions")
    )
    assert len(curve) == 10


def test_curve_json_round_trip(tmp_path):
    dataset = simulate_dataset(SimulationConfig(n_rankings=2000, seed=10))
    curve = fit_position_bias(harvest_interventions(dataset), 10)
    import json

    path = tmp_path / "curve.json"
    path.write_text(json.dumps(curve.to_json_list()))
    from bvnope.estimators import PositionBiasCurve

    restored = PositionBiasCurve.from_array(json.loads(path.read_text()))
    assert restored.values == curve.values
