import numpy as np
import pytest
from numpy.testing import assert_allclose

from onlinefisher import (
    DimensionMismatch,
    MarketInstance,
    NonPositiveInput,
    normalize_market,
    trading_post,
    uniform_bids,
    utilities,
)


def test_normalize_market_scales_budgets_and_rows():
    mk = normalize_market([1.0, 1.0], [[1.0, 1.0], [1.0, 3.0]])
    assert_allclose(mk.budgets, [0.5, 0.5])
    assert_allclose(mk.values, [[0.5, 0.5], [0.25, 0.75]])


def test_normalize_market_single_cell():
    mk = normalize_market([2.0], [[4.0]])
    assert_allclose(mk.budgets, [1.0])
    assert_allclose(mk.values, [[1.0]])
    assert mk.n_buyers == 1 and mk.n_items == 1


def test_normalize_market_rejects_nonpositive_budget():
    with pytest.raises(NonPositiveInput):
        normalize_market([1.0, 0.0], [[1.0, 1.0], [1.0, 1.0]])


def test_normalize_market_rejects_nonpositive_value():
    with pytest.raises(NonPositiveInput):
        normalize_market([1.0, 1.0], [[1.0, -0.5], [1.0, 1.0]])


def test_normalize_market_rejects_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        normalize_market([1.0, 1.0, 1.0], [[1.0, 1.0], [1.0, 1.0]])


def test_market_instance_validates_normalization():
    # direct construction does not rescale, it only checks
    with pytest.raises(NonPositiveInput):
        MarketInstance(budgets=np.array([0.7, 0.7]), values=np.full((2, 2), 0.5))
    with pytest.raises(NonPositiveInput):
        MarketInstance(budgets=np.array([0.5, 0.5]), values=np.full((2, 2), 0.3))


def test_normalized_instances_stay_within_drift_tolerance():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n, m = rng.integers(1, 8), rng.integers(1, 9)
        mk = normalize_market(rng.uniform(0.1, 5.0, n), rng.uniform(0.01, 3.0, (n, m)))
        assert abs(mk.budgets.sum() - 1.0) < 1e-12
        assert np.max(np.abs(mk.values.sum(axis=1) - 1.0)) < 1e-12


def test_trading_post_hand_example():
    mk = normalize_market([0.5, 0.5], [[1.0, 1.0], [1.0, 1.0]])
    res = trading_post(mk, [[0.2, 0.3], [0.1, 0.4]])
    assert_allclose(res.prices, [0.3, 0.7])
    assert_allclose(res.alloc, [[2 / 3, 3 / 7], [1 / 3, 4 / 7]])
    assert not res.has_zero_prices


def test_trading_post_symmetric():
    mk = normalize_market([0.5, 0.5], [[1.0, 1.0], [1.0, 1.0]])
    res = trading_post(mk, [[0.25, 0.25], [0.25, 0.25]])
    assert_allclose(res.prices, [0.5, 0.5])
    assert_allclose(res.alloc, np.full((2, 2), 0.5))


def test_trading_post_single_cell():
    mk = normalize_market([1.0], [[1.0]])
    res = trading_post(mk, [[1.0]])
    assert_allclose(res.prices, [1.0])
    assert_allclose(res.alloc, [[1.0]])


def test_trading_post_flags_zero_price_items():
    mk = normalize_market([0.5, 0.5], [[1.0, 1.0], [1.0, 1.0]])
    res = trading_post(mk, [[0.5, 0.0], [0.5, 0.0]])
    assert res.has_zero_prices
    assert res.zero_price_items.tolist() == [False, True]
    assert_allclose(res.alloc[:, 1], [0.0, 0.0])


def test_trading_post_rejects_negative_bids():
    mk = normalize_market([1.0], [[1.0, 1.0]])
    with pytest.raises(NonPositiveInput):
        trading_post(mk, [[0.5, -0.1]])


def test_trading_post_rejects_wrong_shape():
    mk = normalize_market([1.0], [[1.0, 1.0]])
    with pytest.raises(DimensionMismatch):
        trading_post(mk, [[0.5, 0.3, 0.2]])


def test_trading_post_matches_direct_formula_on_random_bids():
    # scale-consistency: entrywise x_ij = b_ij / sum_k b_kj, reimplemented here
    rng = np.random.default_rng(23)
    for _ in range(100):
        n, m = rng.integers(1, 7), rng.integers(1, 7)
        mk = normalize_market(rng.uniform(0.5, 2.0, n), rng.uniform(0.1, 1.0, (n, m)))
        bids = rng.uniform(0.01, 1.0, (n, m))
        res = trading_post(mk, bids)
        assert_allclose(res.alloc, bids / bids.sum(axis=0, keepdims=True), rtol=0, atol=0)
        # clearance: every positive-price column allocates the full unit supply
        assert np.max(np.abs(res.alloc.sum(axis=0) - 1.0)) < 1e-10


def test_prices_of_feasible_bids_sum_to_one():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n, m = rng.integers(1, 7), rng.integers(1, 7)
        mk = normalize_market(rng.uniform(0.5, 2.0, n), rng.uniform(0.1, 1.0, (n, m)))
        shares = rng.dirichlet(np.ones(m), size=n)
        bids = mk.budgets[:, None] * shares
        res = trading_post(mk, bids)
        assert abs(res.prices.sum() - 1.0) < 1e-10


def test_utilities_hand_examples():
    assert_allclose(utilities([[2.0, 1.0]], [[0.5, 0.5]]), [1.5])
    assert_allclose(utilities([[2.0, 1.0]], [[0.0, 0.0]]), [0.0])
    assert_allclose(
        utilities([[0.5, 0.5], [0.25, 0.75]], [[1.0, 0.0], [0.0, 1.0]]),
        [0.5, 0.75],
    )


def test_utilities_rejects_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        utilities([[1.0, 2.0]], [[0.5], [0.5]])


def test_uniform_bids_examples():
    mk = normalize_market([0.5, 0.5], np.full((2, 2), 0.5))
    assert_allclose(uniform_bids(mk), np.full((2, 2), 0.25))

    mk1 = normalize_market([1.0], np.full((1, 3), 1.0))
    assert_allclose(uniform_bids(mk1), np.full((1, 3), 1 / 3))

    mk2 = normalize_market([0.25, 0.75], np.full((2, 2), 0.5))
    assert_allclose(uniform_bids(mk2), [[0.125, 0.125], [0.375, 0.375]])


def test_uniform_bids_rows_sum_to_budgets():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n, m = rng.integers(1, 9), rng.integers(1, 9)
        mk = normalize_market(rng.uniform(0.5, 2.0, n), rng.uniform(0.1, 1.0, (n, m)))
        assert np.max(np.abs(uniform_bids(mk).sum(axis=1) - mk.budgets)) < 1e-10
