"""Build a small linear Fisher market and solve for its equilibrium.

A market is a budget vector plus a (buyers x items) valuation matrix; the
trading-post mechanism prices each item at the total bid it attracts and
allocates it pro rata.  The solver iterates proportional response on fixed
valuations until successive bids stop moving, which lands on the market
equilibrium: every buyer's spending is an optimal response to the prices,
nobody envies anyone else's bundle (budget-adjusted), and every buyer likes
their own bundle at least as much as an equal split.
"""

import numpy as np

from onlinefisher import (
    envy_check,
    normalize_market,
    proportionality_check,
    solve_equilibrium,
)

market = normalize_market(
    budgets=[3.0, 2.0, 1.0],
    values=[
        [4.0, 1.0, 1.0, 2.0],
        [1.0, 3.0, 2.0, 1.0],
        [1.0, 1.0, 1.0, 6.0],
    ],
)
print("budgets (normalized to sum 1):", market.budgets)
print("values (rows normalized):")
print(market.values.round(4))

eq = solve_equilibrium(market, np.log(market.values))
print(f"\nconverged in {eq.iterations} rounds, final step size {eq.final_kl:.2e}")
print("equilibrium prices:", eq.prices_star.round(6))
print("equilibrium bids:")
print(eq.bids_star.round(6))
print("buyer utilities:", eq.utilities_star.round(6))

alloc = eq.bids_star / eq.prices_star[None, :]
print("\nenvy margin (<= 0 means envy-free):", f"{envy_check(alloc, market.values, market.budgets):.2e}")
print(
    "proportionality slack (>= 0 beats the equal split):",
    f"{proportionality_check(alloc, market.values, market.n_buyers):.2e}",
)

# prices are exactly the bid column sums, and they absorb the whole budget
assert np.allclose(eq.bids_star.sum(axis=0), eq.prices_star)
assert np.isclose(eq.prices_star.sum(), 1.0)
print("\nbids clear the market: column sums equal prices, prices sum to 1")
