"""The two kernel backends must agree bit for bit on shared uniforms."""
import numpy as np
import pytest

from bvnope._kernels import available_backends
from bvnope.rankings import Ranking
from bvnope.rules import PinRule, RuleSet, apply_rules

BACKENDS = available_backends()


def _random_inputs(rng, n_logs=500, n=8, n_rules=2):
    rankings = np.argsort(rng.random((n_logs, n)), axis=1).astype(np.int64)
    items = rng.choice(n, size=n_rules, replace=False).astype(np.int64)
    targets = rng.choice(n, size=n_rules, replace=False).astype(np.int64)
    probs = rng.random(n_rules)
    u_rules = rng.random((n_logs, n_rules))
    return rankings, items, targets, probs, u_rules


def test_compiled_backend_is_built():
    # the package ships a compiled core; if this fails the build is broken
    assert "cython" in BACKENDS, "compiled kernel extension missing"


@pytest.mark.parametrize("seed", range(5))
def test_backends_agree_on_rules(seed):
    if len(BACKENDS) < 2:
        pytest.skip("only one backend available")
    rng = np.random.default_rng(seed)
    rankings, items, targets, probs, u_rules = _random_inputs(rng)
    results = {
        name: impl.apply_pin_rules_batch(rankings, items, targets, probs, u_rules)
        for name, impl in BACKENDS.items()
    }
    ref_displayed, ref_applied = results.pop("pure")
    for displayed, applied in results.values():
        assert np.array_equal(displayed, ref_displayed)
        assert np.array_equal(applied, ref_applied)


@pytest.mark.parametrize("seed", range(3))
def test_backends_agree_on_clicks_and_counts(seed):
    if len(BACKENDS) < 2:
        pytest.skip("only one backend available")
    rng = np.random.default_rng(100 + seed)
    n_logs, n = 400, 10
    displayed = np.argsort(rng.random((n_logs, n)), axis=1).astype(np.int64)
    relevance = (rng.random((n_logs, n)) < 0.5).astype(np.float64)
    bias = 1.0 / np.arange(1, n + 1)
    u_clicks = rng.random((n_logs, n))
    clicks = {
        name: impl.bernoulli_clicks_batch(displayed, relevance, bias, u_clicks)
        for name, impl in BACKENDS.items()
    }
    counts = {name: impl.display_counts(displayed) for name, impl in BACKENDS.items()}
    assert np.array_equal(clicks["pure"], clicks["cython"])
    assert np.array_equal(counts["pure"], counts["cython"])


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_rule_kernel_matches_scalar_semantics(backend):
    """Batch kernel vs the object-level apply_rules, row by row."""
    impl = BACKENDS[backend]
    rng = np.random.default_rng(9)
    rankings, items, targets, probs, u_rules = _random_inputs(rng, n_logs=200)
    displayed, applied = impl.apply_pin_rules_batch(rankings, items, targets, probs, u_rules)
    for i in range(rankings.shape[0]):
        fired = RuleSet(
            tuple(
                PinRule(int(items[r]), int(targets[r]) + 1, float(probs[r]))
                for r in range(len(items))
                if applied[i, r]
            )
        )
        expected = apply_rules(fired, Ranking(rankings[i]))
        assert tuple(displayed[i]) == expected.items
        for r in range(len(items)):
            assert bool(applied[i, r]) == bool(u_rules[i, r] < probs[r])


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_click_kernel_matches_scalar_semantics(backend):
    impl = BACKENDS[backend]
    rng = np.random.default_rng(11)
    n_logs, n = 300, 6
    displayed = np.argsort(rng.random((n_logs, n)), axis=1).astype(np.int64)
    relevance = (rng.random((n_logs, n)) < 0.6).astype(np.float64)
    bias = 1.0 / np.arange(1, n + 1)
    u = rng.random((n_logs, n))
    clicks = impl.bernoulli_clicks_batch(displayed, relevance, bias, u)
    for i in range(0, n_logs, 37):
        for k in range(n):
            expected = u[i, k] < bias[k] * relevance[i, displayed[i, k]]
            assert bool(clicks[i, k]) == bool(expected)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_display_counts_columns_sum_to_n_logs(backend):
    impl = BACKENDS[backend]
    rng = np.random.default_rng(13)
    displayed = np.argsort(rng.random((250, 7)), axis=1).astype(np.int64)
    counts = impl.display_counts(displayed)
    assert counts.shape == (7, 7)
    assert np.all(counts.sum(axis=0) == 250)
    assert np.all(counts.sum(axis=1) == 250)


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_no_rules_passthrough(backend):
    impl = BACKENDS[backend]
    rng = np.random.default_rng(17)
    rankings = np.argsort(rng.random((50, 5)), axis=1).astype(np.int64)
    empty = np.zeros(0, dtype=np.int64)
    displayed, applied = impl.apply_pin_rules_batch(
        rankings, empty, empty, np.zeros(0), rng.random((50, 0))
    )
    assert np.array_equal(displayed, rankings)
    assert applied.shape == (50, 0)
