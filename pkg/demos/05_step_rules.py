"""Why the constant step is the right step for these dynamics.

Classic online mirror descent shrinks its step size over time to tame
gradient noise.  Proportional response is mirror descent on the spending
objective, but its geometry rewards the opposite choice: the constant unit
step keeps full responsiveness and still averages the noise out, while
decaying schedules (1/t, 1/sqrt(t)) slow the bids down so much that the
fairness regret keeps climbing long after the constant rule has flattened.
"""

import numpy as np

from onlinefisher import (
    NoiseModel,
    StepRule,
    fairness_regret,
    make_stream,
    mean_values,
    normalize_market,
    run_online,
    solve_equilibrium,
)

rng = np.random.default_rng(1)
market = normalize_market(rng.uniform(size=6), rng.uniform(size=(6, 10)))
model = NoiseModel(kind="stationary", sigma=0.02)
eq = None

print(f"{'rule':>16s} {'regret @ 500':>14s} {'regret @ 2000':>14s}")
for rule in (StepRule.CONSTANT_ONE, StepRule.INVERSE_SQRT_T, StepRule.INVERSE_T):
    traj = run_online(market, make_stream(model, market, seed=3), horizon=2000, rule=rule)
    if eq is None:
        eq = solve_equilibrium(market, traj.baseline_log, mean_vals=mean_values(model, market))
    series = fairness_regret(traj, eq).cumulative
    print(f"{rule.value:>16s} {series[499]:14.4f} {series[-1]:14.4f}")

print("\nthe decaying rules are still accumulating regret at the end of the run;")
print("the constant rule's curve is nearly flat because its bids hover in a")
print("tight noise-scale band around the equilibrium of the averaged market")
