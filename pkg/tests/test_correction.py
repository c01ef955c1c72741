import numpy as np
import pytest

from bvnope.bvn import decompose, stay_probability_matrix
from bvnope.correction import (
    BvnRankingSampler,
    PropensityModel,
    check_full_support,
    correct_exact,
    correct_mc,
    correct_stochastic,
)
from bvnope.rankings import Ranking, apply_permutation, check_doubly_stochastic
from bvnope.rules import PinRule, RuleSet, iter_subsets, rule_permutation


def brute_force_corrected(base, decomposition, rules):
    """Independent oracle: object-level enumeration over (component, subset)."""
    n = len(base)
    out = np.zeros((n, n))
    for perm, p_m in decomposition.components:
        randomized = apply_permutation(base, perm)
        for subset, p_s in iter_subsets(rules):
            displayed = apply_permutation(randomized, rule_permutation(subset, randomized))
            for pos, item in enumerate(displayed.items):
                out[item, pos] += p_m * p_s
    return out


@pytest.fixture(scope="module")
def stay_decomposition():
    return decompose(stay_probability_matrix(10, 0.95))


def test_empty_rules_reindexes_reconstruction(stay_decomposition):
    base = Ranking([3, 1, 4, 0, 9, 2, 6, 5, 8, 7])
    got = correct_stochastic(base, stay_decomposition, RuleSet())
    slot_matrix = stay_decomposition.reconstruct()
    inv = np.argsort(base.to_array())
    assert np.allclose(got.entries, slot_matrix[inv, :], atol=1e-12)


def test_exact_requires_deterministic_rules(stay_decomposition):
    base = Ranking.identity(10)
    with pytest.raises(ValueError, match="stochastic"):
        correct_exact(base, stay_decomposition, RuleSet((PinRule(0, 1, 0.95),)))


def test_exact_deterministic_pin_forces_column(stay_decomposition):
    # pin the item logged at rank 8 to position 1: column 1 becomes an
    # indicator of that item, wiping out support for everyone else there
    base = Ranking.identity(10)
    pinned_item = 7  # 0-based item at logged rank 8
    rules = RuleSet((PinRule(pinned_item, 1, 1.0),))
    got = correct_exact(base, stay_decomposition, rules)
    oracle = brute_force_corrected(base, stay_decomposition, rules)
    assert np.allclose(got.entries, oracle, atol=1e-12)
    assert got[pinned_item, 0] == pytest.approx(1.0)
    others = np.delete(np.arange(10), pinned_item)
    assert np.all(got.entries[others, 0] == 0.0)


def test_exact_equals_stochastic_at_probability_one(stay_decomposition):
    base = Ranking([2, 0, 1, 3, 4, 5, 6, 7, 8, 9])
    rules = RuleSet((PinRule(4, 2, 1.0), PinRule(0, 9, 1.0)))
    exact = correct_exact(base, stay_decomposition, rules)
    stochastic = correct_stochastic(base, stay_decomposition, rules)
    assert np.array_equal(exact.entries, stochastic.entries)  # bitwise, same sums


def test_single_component_pin_gives_permutation_matrix():
    d = decompose(np.eye(4))
    base = Ranking([2, 1, 3, 0])
    got = correct_exact(base, d, RuleSet((PinRule(3, 1, 1.0),)))
    displayed = Ranking([3, 2, 1, 0])  # pin 3 to front, rest keep order
    expected = np.zeros((4, 4))
    for pos, item in enumerate(displayed.items):
        expected[item, pos] = 1.0
    assert np.array_equal(got.entries, expected)


def test_stochastic_pin_column_mass(stay_decomposition):
    # pinned with p=0.95: P'(pinned item at 1) = 0.95 + 0.05 * P(at 1 | no pin)
    base = Ranking.identity(10)
    item = 7
    rules = RuleSet((PinRule(item, 1, 0.95),))
    got = correct_stochastic(base, stay_decomposition, rules)
    no_rules = correct_stochastic(base, stay_decomposition, RuleSet())
    expected = 0.95 + 0.05 * no_rules[item, 0]
    assert got[item, 0] == pytest.approx(expected, abs=1e-12)


def test_stochastic_matches_brute_force_random_cases():
    # 50 random (decomposition, base, ruleset) cases: |rules| <= 3, n <= 10
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(3, 11))
        probs = rng.dirichlet(np.ones(3))
        m = np.zeros((n, n))
        for p in probs:
            m[np.arange(n), rng.permutation(n)] += p
        d = decompose(m)
        base = Ranking(rng.permutation(n))
        n_rules = int(rng.integers(0, 4))
        items = rng.choice(n, size=n_rules, replace=False)
        targets = rng.choice(n, size=n_rules, replace=False) + 1
        rules = RuleSet(
            tuple(
                PinRule(int(i), int(t), float(rng.uniform(0.3, 1.0)))
                for i, t in zip(items, targets)
            )
        )
        got = correct_stochastic(base, d, rules)
        assert np.allclose(got.entries, brute_force_corrected(base, d, rules), atol=1e-12)
        assert check_doubly_stochastic(got.entries, tol=1e-9).ok


def test_stochastic_row_is_exact_position_distribution(stay_decomposition):
    """Row j is the exact law of item j's displayed position (MC check)."""
    base = Ranking.identity(10)
    rules = RuleSet((PinRule(0, 1, 0.95),))
    corrected = correct_stochastic(base, stay_decomposition, rules)
    rng = np.random.default_rng(11)
    mc = correct_mc(BvnRankingSampler(base, stay_decomposition), rules, 200_000, rng)
    assert np.abs(mc.entries - corrected.entries).max() < 0.01


def test_mc_single_sample_is_permutation_matrix(stay_decomposition):
    base = Ranking.identity(10)
    mc = correct_mc(BvnRankingSampler(base, stay_decomposition), RuleSet(), 1, np.random.default_rng(0))
    assert set(np.unique(mc.entries)) == {0.0, 1.0}
    assert np.all(mc.entries.sum(axis=1) == 1.0)


def test_mc_no_rules_converges_to_exact(stay_decomposition):
    base = Ranking.identity(10)
    exact = correct_stochastic(base, stay_decomposition, RuleSet())
    mc = correct_mc(
        BvnRankingSampler(base, stay_decomposition), RuleSet(), 1_000_000, np.random.default_rng(5)
    )
    assert np.abs(mc.entries - exact.entries).max() < 0.002


def test_mc_error_scales_with_sample_count(stay_decomposition):
    """Median max-error decreases as L grows (O(1/sqrt(L)) convergence)."""
    base = Ranking.identity(10)
    rules = RuleSet((PinRule(0, 1, 0.95),))
    exact = correct_stochastic(base, stay_decomposition, rules)
    sampler = BvnRankingSampler(base, stay_decomposition)
    medians = []
    for level, n_samples in enumerate((1_000, 10_000, 100_000, 1_000_000)):
        errors = []
        for seed in range(10):
            mc = correct_mc(sampler, rules, n_samples, np.random.default_rng(100 * level + seed))
            errors.append(np.abs(mc.entries - exact.entries).max())
        medians.append(np.median(errors))
    assert all(a > b for a, b in zip(medians, medians[1:]))


def test_mc_rejects_zero_samples(stay_decomposition):
    with pytest.raises(ValueError):
        correct_mc(
            BvnRankingSampler(Ranking.identity(10), stay_decomposition),
            RuleSet(),
            0,
            np.random.default_rng(0),
        )


def test_full_support_all_positive(stay_decomposition):
    corrected = correct_stochastic(Ranking.identity(10), stay_decomposition, RuleSet())
    assert check_full_support(corrected, Ranking(np.random.default_rng(0).permutation(10))) == []


def test_full_support_flags_deterministic_pin(stay_decomposition):
    base = Ranking.identity(10)
    corrected = correct_exact(base, stay_decomposition, RuleSet((PinRule(7, 1, 1.0),)))
    target = Ranking([0, 1, 2, 3, 4, 5, 6, 7, 8, 9])  # wants item 0 at position 1
    violations = check_full_support(corrected, target)
    assert (0, 1) in violations
    # the pinned item can never appear anywhere else either
    assert (7, 8) in violations


def test_threshold_distinguishes_zero_from_dust(stay_decomposition):
    base = Ranking.identity(10)
    corrected = correct_exact(base, stay_decomposition, RuleSet((PinRule(7, 1, 1.0),)))
    entries = corrected.entries.copy()
    entries[0, 0] = 1e-13  # numerical dust, not true support
    target = Ranking(range(10))
    assert (0, 1) in check_full_support(entries, target, threshold=1e-12)
    assert (0, 1) not in check_full_support(entries, target, threshold=0.0)


def test_propensity_model_matches_direct_correction(stay_decomposition):
    rules = RuleSet((PinRule(0, 1, 0.95),))
    model = PropensityModel(stay_decomposition, rules=rules, mode="stochastic")
    rng = np.random.default_rng(21)
    for _ in range(5):
        base = Ranking(rng.permutation(10))
        direct = correct_stochastic(base, stay_decomposition, rules)
        via_model = model.matrix_for(base)
        assert np.allclose(via_model.entries, direct.entries, atol=1e-12)


def test_propensity_model_batch_matches_per_log(stay_decomposition):
    rules = RuleSet((PinRule(3, 2, 0.8),))
    model = PropensityModel(stay_decomposition, rules=rules, mode="stochastic")
    rng = np.random.default_rng(22)
    rankings = np.array([rng.permutation(10) for _ in range(20)], dtype=np.int64)
    stacked = model.matrices_for_logs(rankings)
    for i in range(20):
        expected = correct_stochastic(Ranking(rankings[i]), stay_decomposition, rules)
        assert np.allclose(stacked[i], expected.entries, atol=1e-12)


def test_propensity_model_raw_ignores_rules(stay_decomposition):
    model = PropensityModel(stay_decomposition, rules=RuleSet((PinRule(0, 1, 0.95),)), mode="raw")
    base = Ranking.identity(10)
    assert np.allclose(model.matrix_for(base).entries, stay_decomposition.reconstruct(), atol=1e-12)
