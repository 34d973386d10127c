"""Market primitives: instances, the trading-post allocation rule, utilities.

A market has N buyers with positive budgets summing to one and M divisible
items in unit supply.  Buyers submit a nonnegative bid matrix b (row i is
buyer i's spending plan); the trading post sets the price of item j to the
total spend p_j = sum_i b_ij and allocates x_ij = b_ij / p_j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonPositiveInput

# Normalization drift tolerated on stored instances (budgets and value rows).
NORM_TOL = 1e-12


@dataclass(frozen=True)
class MarketInstance:
    """A normalized market: budgets sum to 1, each valuation row sums to 1.

    Build instances through :func:`normalize_market`; direct construction
    validates but does not rescale.
    """

    budgets: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        budgets = np.asarray(self.budgets, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if budgets.ndim != 1 or values.ndim != 2:
            raise DimensionMismatch(
                "budgets must be a vector and values a matrix, got shapes "
                f"{budgets.shape} and {values.shape}"
            )
        if values.shape[0] != budgets.shape[0]:
            raise DimensionMismatch(
                f"values has {values.shape[0]} rows for {budgets.shape[0]} budgets"
            )
        if budgets.size == 0 or values.shape[1] == 0:
            raise DimensionMismatch("need at least one buyer and one item")
        if np.any(budgets <= 0.0):
            raise NonPositiveInput("all budgets must be strictly positive")
        if np.any(values <= 0.0):
            raise NonPositiveInput("all valuations must be strictly positive")
        if abs(budgets.sum() - 1.0) > NORM_TOL:
            raise NonPositiveInput("budgets must sum to 1; use normalize_market")
        if np.max(np.abs(values.sum(axis=1) - 1.0)) > NORM_TOL:
            raise NonPositiveInput("value rows must sum to 1; use normalize_market")
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "values", values)

    @property
    def n_buyers(self) -> int:
        return self.budgets.shape[0]

    @property
    def n_items(self) -> int:
        return self.values.shape[1]


def normalize_market(budgets, values) -> MarketInstance:
    """Scale budgets to total 1 and each valuation row to total 1.

    Raises NonPositiveInput if any budget or valuation entry is <= 0,
    DimensionMismatch on shape disagreement.
    """
    budgets = np.asarray(budgets, dtype=float)
    values = np.asarray(values, dtype=float)
    if budgets.ndim != 1 or values.ndim != 2 or values.shape[0] != budgets.shape[0]:
        raise DimensionMismatch(
            f"incompatible shapes: budgets {budgets.shape}, values {values.shape}"
        )
    if np.any(budgets <= 0.0) or np.any(values <= 0.0):
        raise NonPositiveInput("budgets and valuations must be strictly positive")
    budgets = budgets / budgets.sum()
    values = values / values.sum(axis=1, keepdims=True)
    # Kill the last-ulp drift so stored instances satisfy the 1e-12 invariant.
    budgets = budgets / budgets.sum()
    values = values / values.sum(axis=1, keepdims=True)
    return MarketInstance(budgets=budgets, values=values)


@dataclass(frozen=True)
class TradingPostResult:
    """Prices and allocation induced by a bid matrix.

    ``zero_price_items`` flags items nobody bid on: they have price zero and
    are simply not allocated (all x_ij = 0 in that column).
    """

    prices: np.ndarray
    alloc: np.ndarray
    zero_price_items: np.ndarray = field(repr=False)

    @property
    def has_zero_prices(self) -> bool:
        return bool(self.zero_price_items.any())


def trading_post(market: MarketInstance, bids) -> TradingPostResult:
    """Clear the market: p_j = sum_i b_ij and x_ij = b_ij / p_j.

    Items with zero price receive zero allocation and are flagged on the
    result rather than raising.
    """
    bids = np.asarray(bids, dtype=float)
    if bids.shape != (market.n_buyers, market.n_items):
        raise DimensionMismatch(
            f"bids shape {bids.shape} does not match the "
            f"{market.n_buyers}x{market.n_items} market"
        )
    if np.any(bids < 0.0):
        raise NonPositiveInput("bids must be nonnegative")
    prices = bids.sum(axis=0)
    zero = prices <= 0.0
    safe = np.where(zero, 1.0, prices)
    alloc = bids / safe
    if zero.any():
        alloc[:, zero] = 0.0
    return TradingPostResult(prices=prices, alloc=alloc, zero_price_items=zero)


def utilities(values, alloc) -> np.ndarray:
    """Linear utilities u_i = sum_j v_ij * x_ij for an allocation matrix."""
    values = np.asarray(values, dtype=float)
    alloc = np.asarray(alloc, dtype=float)
    if values.shape != alloc.shape:
        raise DimensionMismatch(
            f"values {values.shape} and allocation {alloc.shape} differ in shape"
        )
    return (values * alloc).sum(axis=1)


def uniform_bids(market: MarketInstance) -> np.ndarray:
    """The uniform opening bid: each buyer splits their budget evenly, B_i / M."""
    return np.tile(market.budgets[:, None] / market.n_items, (1, market.n_items))
