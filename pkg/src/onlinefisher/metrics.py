"""Regret measures, price diagnostics, and fairness checks for finished runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import EquilibriumSolution, Trajectory
from .errors import (
    BaselineMismatch,
    DimensionMismatch,
    IndexOutOfRange,
    NonPositiveSeries,
)


@dataclass
class RegretSeries:
    """Cumulative regret per period (1-based periods, index t-1).

    Individual-regret series carry the buyer's equilibrium utility level so
    the relative form R/(t * u_star) is available; fairness regret has no
    such scale and leaves it unset.
    """

    cumulative: np.ndarray
    u_star: float | None = None

    @property
    def final(self) -> float:
        return float(self.cumulative[-1])

    @property
    def relative(self) -> np.ndarray:
        if self.u_star is None:
            raise ValueError("relative form is only defined for individual regret")
        periods = np.arange(1, self.cumulative.size + 1, dtype=float)
        return self.cumulative / (periods * self.u_star)


def _require_same_baseline(traj: Trajectory, eq: EquilibriumSolution) -> None:
    if traj.baseline_log.shape != eq.baseline_log.shape or np.max(
        np.abs(traj.baseline_log - eq.baseline_log)
    ) > 1e-12:
        raise BaselineMismatch(
            "trajectory and equilibrium use different baseline log-values"
        )


def fairness_regret(traj: Trajectory, eq: EquilibriumSolution) -> RegretSeries:
    """Cumulative sum of the population-objective gap, sum_t Phi(b_t) - Phi*.

    Every term is nonnegative up to solver roundoff, so the series is
    nondecreasing.
    """
    _require_same_baseline(traj, eq)
    return RegretSeries(np.cumsum(traj.expected_phi - eq.phi_star))


def individual_regret(
    traj: Trajectory,
    eq: EquilibriumSolution,
    buyer: int,
    mean_vals,
    realized: bool = False,
) -> RegretSeries:
    """Cumulative utility shortfall of one buyer against their equilibrium level.

    The equilibrium level u* is the buyer's utility for the equilibrium
    allocation under the mean values E[v].  By default each period is scored
    by the deterministic proxy sum_j E[v_ij] x_ij_t tracked during the run;
    ``realized=True`` scores with the realized utilities instead.
    """
    _require_same_baseline(traj, eq)
    n = traj.market.n_buyers
    if not 0 <= buyer < n:
        raise IndexOutOfRange(f"buyer {buyer} outside 0..{n - 1}")
    mean_vals = np.asarray(mean_vals, dtype=float)
    if np.max(np.abs(mean_vals - traj.mean_values)) > 1e-12:
        raise BaselineMismatch(
            "mean values disagree with the ones tracked during the run"
        )
    alloc_star = eq.bids_star / eq.prices_star[None, :]
    u_star = float((mean_vals[buyer] * alloc_star[buyer]).sum())
    per_period = traj.utilities if realized else traj.mean_utilities
    return RegretSeries(np.cumsum(u_star - per_period[:, buyer]), u_star=u_star)


def price_diagnostics(traj: Trajectory, eq: EquilibriumSolution) -> tuple[float, float]:
    """Squared L1 distances to equilibrium prices.

    Returns (distance of the time-averaged price vector, distance of the
    final price vector), both as ||.||_1^2.
    """
    _require_same_baseline(traj, eq)
    avg = traj.prices.mean(axis=0)
    d_avg = float(np.abs(avg - eq.prices_star).sum() ** 2)
    d_last = float(np.abs(traj.prices[-1] - eq.prices_star).sum() ** 2)
    return d_avg, d_last


def envy_check(alloc, values, budgets) -> float:
    """Largest budget-scaled envy across ordered buyer pairs.

    Returns max over i != k of u_i(x_k)/B_k - u_i(x_i)/B_i; at most ~0 for
    an equilibrium allocation.  A single buyer has nobody to envy (0.0).
    """
    alloc = np.asarray(alloc, dtype=float)
    values = np.asarray(values, dtype=float)
    budgets = np.asarray(budgets, dtype=float)
    if alloc.shape != values.shape or budgets.shape != (alloc.shape[0],):
        raise DimensionMismatch("allocation, values, and budgets shapes disagree")
    n = alloc.shape[0]
    if n == 1:
        return 0.0
    cross = values @ alloc.T  # cross[i, k] = u_i(bundle of k)
    scaled = cross / budgets[None, :]
    own = np.diag(scaled)
    gap = scaled - own[:, None]
    np.fill_diagonal(gap, -np.inf)
    return float(gap.max())


def proportionality_check(alloc, values, n_buyers: int) -> float:
    """Smallest slack of u_i(x_i) over the proportional share u_i(supply)/N."""
    alloc = np.asarray(alloc, dtype=float)
    values = np.asarray(values, dtype=float)
    if alloc.shape != values.shape:
        raise DimensionMismatch("allocation and values shapes disagree")
    own = (values * alloc).sum(axis=1)
    share = values.sum(axis=1) / n_buyers
    return float((own - share).min())


def loglog_slope(xs, ys) -> float:
    """OLS slope of log(ys) against log(xs)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
        raise DimensionMismatch("need two equal-length vectors of >= 2 points")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise NonPositiveSeries("log-log fit needs strictly positive series")
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)
